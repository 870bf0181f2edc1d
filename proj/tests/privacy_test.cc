// Copyright 2026 The Phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.h"
#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"
#include "phasegen/privacy.h"

namespace phasegen {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Equal infinities count as agreement.
void expect_close(double got, double want, double tol) {
  if (std::isinf(want)) {
    EXPECT_EQ(got, want);
  } else {
    EXPECT_NEAR(got, want, tol * std::max(1.0, std::abs(want)));
  }
}

TEST(GaussianRdp, ClosedForm) {
  EXPECT_DOUBLE_EQ(gaussian_rdp(1.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(gaussian_rdp(10.0, 2.0), 0.01);
  EXPECT_DOUBLE_EQ(gaussian_rdp(5.0, 25.0), 0.5);  // 25 / 50
  EXPECT_LT(gaussian_rdp(1e8, 2.0), 1e-15);
}

TEST(GaussianRdp, RejectsBadArguments) {
  EXPECT_THROW(gaussian_rdp(0.0, 2.0), DomainError);
  EXPECT_THROW(gaussian_rdp(-1.0, 2.0), DomainError);
  EXPECT_THROW(gaussian_rdp(1.0, 1.0), DomainError);
}

TEST(GaussianRdp, MatchesOracleOnGrid) {
  for (double sigma : {0.3, 1.0, 2.5, 117.0}) {
    for (double order : {1.5, 2.0, 10.0, 128.0}) {
      EXPECT_LE(rel(gaussian_rdp(sigma, order),
                    static_cast<double>(oracle::gaussian_rdp(sigma, order))),
                1e-10);
    }
  }
}

TEST(DpemMoment, Examples) {
  EXPECT_DOUBLE_EQ(dpem_moment(1.0, 3, 2.0), 1.75);
  EXPECT_DOUBLE_EQ(dpem_moment(2.0, 3, 1.0), 21.0);
  EXPECT_THROW(dpem_moment(1.0, 0, 2.0), DomainError);
  EXPECT_THROW(dpem_moment(1.0, 3, 0.0), DomainError);
}

TEST(DpemMoment, MatchesOracleOnGrid) {
  for (double lam : {1.0, 4.0, 31.0}) {
    for (std::int64_t k : {1, 3, 10}) {
      for (double sigma : {0.5, 20.0, 194.0}) {
        EXPECT_LE(rel(dpem_moment(lam, k, sigma),
                      static_cast<double>(oracle::dpem_moment(lam, k, sigma))),
                  1e-10);
      }
    }
  }
}

TEST(DpsgdMoment, ZeroSamplingIsFree) { EXPECT_EQ(dpsgd_moment(2, 0.0, 1.4), 0.0); }

TEST(DpsgdMoment, GoldenValues) {
  EXPECT_LE(rel(dpsgd_moment(2, 0.01, 1.4), oracle::kSgdMomentSmall), 1e-8);
  EXPECT_NEAR(dpsgd_moment(2, 0.01, 1.4), 1.88e-4, 0.01e-4);
  EXPECT_LE(rel(dpsgd_moment(5, 300.0 / 63000.0, 1.4), oracle::kSgdMomentMnist), 1e-8);
}

TEST(DpsgdMoment, MatchesTermByTermOracle) {
  int checked = 0;
  for (int lam : {1, 2, 4, 8, 16}) {
    for (auto [s, sigma] : {std::pair{0.001, 1.0}, std::pair{0.0048, 1.4}, std::pair{0.02, 2.0},
                            std::pair{0.1, 4.0}}) {
      const double want = static_cast<double>(oracle::dpsgd_moment(lam, s, sigma));
      EXPECT_LE(rel(dpsgd_moment(lam, s, sigma), want), 1e-8)
          << "lambda=" << lam << " s=" << s << " sigma=" << sigma;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 20);
}

TEST(DpsgdMoment, OverflowGivesInfinity) {
  EXPECT_EQ(dpsgd_moment(127, 0.5, 0.3), kInf);
}

TEST(DpsgdMoment, RejectsBadArguments) {
  EXPECT_THROW(dpsgd_moment(0, 0.01, 1.0), DomainError);
  EXPECT_THROW(dpsgd_moment(2, 1.0, 1.0), DomainError);
  EXPECT_THROW(dpsgd_moment(2, -0.1, 1.0), DomainError);
  EXPECT_THROW(dpsgd_moment(2, 0.1, 0.0), DomainError);
}

TEST(Monotonicity, DecreasingInSigmaIncreasingElsewhere) {
  for (double order = 2; order <= 64; order *= 2) {
    EXPECT_GT(gaussian_rdp(1.0, order), gaussian_rdp(2.0, order));
    EXPECT_LT(gaussian_rdp(1.0, order), gaussian_rdp(1.0, order + 1));
  }
  for (std::int64_t lam = 1; lam < 20; ++lam) {
    EXPECT_GT(dpem_moment(lam, 3, 1.0), dpem_moment(lam, 3, 1.5));
    EXPECT_LT(dpem_moment(lam, 3, 1.0), dpem_moment(lam + 1, 3, 1.0));
    EXPECT_LT(dpem_moment(lam, 3, 1.0), dpem_moment(lam, 4, 1.0));
  }
  for (std::int64_t lam = 2; lam < 30; ++lam) {
    EXPECT_GT(dpsgd_moment(lam, 0.01, 1.2), dpsgd_moment(lam, 0.01, 1.6));
    EXPECT_LT(dpsgd_moment(lam, 0.01, 1.2), dpsgd_moment(lam + 1, 0.01, 1.2));
    EXPECT_LT(dpsgd_moment(lam, 0.01, 1.2), dpsgd_moment(lam, 0.02, 1.2));
  }
}

TEST(MaToRdp, Examples) {
  EXPECT_EQ(ma_to_rdp(1, 1.75).order, 2.0);
  EXPECT_EQ(ma_to_rdp(1, 1.75).epsilon, 1.75);
  EXPECT_EQ(ma_to_rdp(2, 4.0).order, 3.0);
  EXPECT_EQ(ma_to_rdp(2, 4.0).epsilon, 2.0);
  const RdpPoint p = ma_to_rdp(1, dpem_moment(1, 3, 2.0));
  EXPECT_EQ(p.order, 2.0);
  EXPECT_DOUBLE_EQ(p.epsilon, 1.75);
  // Cross-check with the per-step EM curve at order 2.
  const RdpCurve em = mechanism_curve(DpEm{2.0, 3, 1}, default_orders());
  EXPECT_DOUBLE_EQ(em.at(2.0), 1.75);
  EXPECT_THROW(ma_to_rdp(0.5, 1.0), DomainError);
  EXPECT_THROW(ma_to_rdp(1.0, -1.0), DomainError);
}

TEST(RdpCurve, Validation) {
  EXPECT_THROW(RdpCurve({1.0, 2.0}, {0.0, 0.0}), DomainError);
  EXPECT_THROW(RdpCurve({3.0, 2.0}, {0.0, 0.0}), DomainError);
  EXPECT_THROW(RdpCurve({2.0, 3.0}, {0.0}), DomainError);
  EXPECT_THROW(RdpCurve({2.0}, {-1.0}), DomainError);
  EXPECT_THROW(RdpCurve({2.0}, {std::nan("")}), DomainError);
  EXPECT_NO_THROW(RdpCurve({2.0}, {kInf}));
}

TEST(Compose, SumsPointwise) {
  const auto orders = default_orders();
  const RdpCurve a(orders, std::vector<double>(orders.size(), 0.3));
  const RdpCurve b(orders, std::vector<double>(orders.size(), 0.5));
  const RdpCurve ab = compose(std::vector<RdpCurve>{a, b});
  const RdpCurve ba = compose(std::vector<RdpCurve>{b, a});
  for (std::size_t i = 0; i < orders.size(); ++i) {
    EXPECT_DOUBLE_EQ(ab.values()[i], 0.8);
    EXPECT_EQ(ab.values()[i], ba.values()[i]);
  }
  EXPECT_EQ(compose(std::vector<RdpCurve>{a}).values(), a.values());
}

TEST(Compose, RepeatedStepsScaleLinearly) {
  const auto orders = default_orders();
  const RdpCurve step = mechanism_curve(SubsampledSgd{1.4, 0.005, 1}, orders);
  std::vector<RdpCurve> many(7, step);
  const RdpCurve seven = compose(many);
  const RdpCurve direct = mechanism_curve(SubsampledSgd{1.4, 0.005, 7}, orders);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    expect_close(seven.values()[i], 7 * step.values()[i], 1e-12);
    expect_close(direct.values()[i], seven.values()[i], 1e-12);
  }
}

TEST(Compose, GridMismatch) {
  const RdpCurve a({2.0, 3.0}, {0.0, 0.0});
  const RdpCurve b({2.0, 4.0}, {0.0, 0.0});
  EXPECT_THROW(compose(std::vector<RdpCurve>{a, b}), GridMismatchError);
}

TEST(RdpToDp, GaussianSigmaFive) {
  const auto orders = default_orders();
  const RdpCurve c = mechanism_curve(GaussianRelease{5.0, 1}, orders);
  const DpConversion d = rdp_to_dp(c, 1e-5);
  const auto [want, arg] = oracle::rdp_to_dp(c.orders(), c.values(), 1e-5L);
  EXPECT_LE(rel(d.epsilon, static_cast<double>(want)), 1e-10);
  EXPECT_EQ(d.order, arg);
  EXPECT_EQ(d.order, 25.0);
  EXPECT_NEAR(d.epsilon, 0.9797, 5e-5);
}

TEST(RdpToDp, ZeroCurveIsDeltaTermOnly) {
  const DpConversion d = rdp_to_dp(RdpCurve::zero(default_orders()), 1e-5);
  EXPECT_LE(rel(d.epsilon, std::log(1e5) / 127.0), 1e-10);
  EXPECT_NEAR(d.epsilon, 0.0906, 1e-4);
  EXPECT_EQ(d.order, 128.0);
}

TEST(RdpToDp, DeltaNearOneApproachesMinimum) {
  const RdpCurve c = mechanism_curve(GaussianRelease{3.0, 1}, default_orders());
  const DpConversion d = rdp_to_dp(c, 1.0 - 1e-12);
  EXPECT_NEAR(d.epsilon, gaussian_rdp(3.0, 2.0), 1e-9);
}

TEST(RdpToDp, Errors) {
  EXPECT_THROW(rdp_to_dp(RdpCurve(), 1e-5), DomainError);
  EXPECT_THROW(rdp_to_dp(RdpCurve::zero(default_orders()), 0.0), DomainError);
  EXPECT_THROW(rdp_to_dp(RdpCurve::zero(default_orders()), 1.0), DomainError);
}

TEST(RdpToDp, MatchesOracleOnMixedCurves) {
  const auto orders = default_orders();
  for (double sigma : {0.8, 3.0, 40.0}) {
    for (double delta : {1e-3, 1e-5, 1e-9}) {
      const std::vector<MechanismSpec> specs = {GaussianRelease{sigma, 2}, DpEm{sigma * 10, 3, 20},
                                                SubsampledSgd{1.1, 0.004, 500}};
      const BudgetReport r = total_privacy(specs, delta, orders);
      const auto [want, arg] = oracle::rdp_to_dp(r.total.orders(), r.total.values(), delta);
      EXPECT_LE(rel(r.epsilon, static_cast<double>(want)), 1e-10);
      EXPECT_EQ(r.optimal_order, arg);
    }
  }
}

TEST(Property, ComposedConversionNeverBeatsSumAtSharedOrder) {
  const auto orders = default_orders();
  const RdpCurve a = mechanism_curve(GaussianRelease{2.0, 1}, orders);
  const RdpCurve b = mechanism_curve(DpEm{30.0, 3, 10}, orders);
  const RdpCurve ab = compose(std::vector<RdpCurve>{a, b});
  const double delta = 1e-5;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double tail = std::log(1 / delta) / (orders[i] - 1);
    const double joint = ab.values()[i] + tail;
    const double separate = (a.values()[i] + tail) + (b.values()[i] + tail);
    EXPECT_LE(joint, separate);
  }
}

TEST(TotalPrivacy, PartsSumToTotal) {
  const std::vector<MechanismSpec> specs = {GaussianRelease{117.0, 2}, DpEm{194.0, 3, 20},
                                            SubsampledSgd{1.6, 300.0 / 63000.0, 840}};
  const BudgetReport r = total_privacy(specs, 1e-5);
  ASSERT_EQ(r.parts.size(), 3u);
  for (std::size_t i = 0; i < r.total.size(); ++i) {
    double sum = 0.0;
    for (const auto& p : r.parts) sum += p.curve.values()[i];
    expect_close(r.total.values()[i], sum, 1e-15);
  }
  const double tail = std::log(1e5) / (r.optimal_order - 1);
  EXPECT_NEAR(r.epsilon, r.total.at(r.optimal_order) + tail, 1e-12);
}

TEST(TotalPrivacy, SingleGaussianMatchesConversion) {
  const BudgetReport r = total_privacy(std::vector<MechanismSpec>{GaussianRelease{5.0, 1}}, 1e-5);
  EXPECT_NEAR(r.epsilon, 0.9797, 5e-5);
  EXPECT_EQ(r.optimal_order, 25.0);
}

TEST(TotalPrivacy, MoreStepsCostMore) {
  const double base =
      total_privacy(std::vector<MechanismSpec>{SubsampledSgd{1.4, 0.01, 100}}, 1e-5).epsilon;
  const double doubled =
      total_privacy(std::vector<MechanismSpec>{SubsampledSgd{1.4, 0.01, 200}}, 1e-5).epsilon;
  EXPECT_GT(doubled, base);
}

TEST(TotalPrivacy, HugeNoiseLeavesDeltaTerm) {
  const std::vector<MechanismSpec> specs = {GaussianRelease{1e9, 2}, DpEm{1e9, 3, 20}};
  EXPECT_NEAR(total_privacy(specs, 1e-5).epsilon, std::log(1e5) / 127.0, 1e-9);
}

TEST(TotalPrivacy, RejectsEmptyAndInvalid) {
  EXPECT_THROW(total_privacy(std::vector<MechanismSpec>{}, 1e-5), DomainError);
  EXPECT_THROW(total_privacy(std::vector<MechanismSpec>{GaussianRelease{0.0, 1}}, 1e-5),
               DomainError);
  EXPECT_THROW(total_privacy(std::vector<MechanismSpec>{SubsampledSgd{1.0, 1.5, 10}}, 1e-5),
               DomainError);
  EXPECT_THROW(total_privacy(std::vector<MechanismSpec>{DpEm{1.0, 0, 10}}, 1e-5), DomainError);
}

PipelineStructure mnist_structure() {
  PipelineStructure s;
  s.sampling_probability = 300.0 / 63000.0;
  s.sgd_steps = 4 * (63000 / 300);
  return s;
}

TEST(Calibrate, MnistLandsJustUnderTarget) {
  const PrivacySpec p;
  const Calibration c = calibrate(p, mnist_structure());
  EXPECT_GT(c.report.epsilon, 0.95);
  EXPECT_LE(c.report.epsilon, 1.0);
  // Independent re-check of the certified value.
  const BudgetReport again =
      total_privacy(mnist_structure().mechanisms(c.pca_sigma, c.em_sigma, c.sgd_sigma), p.delta);
  EXPECT_DOUBLE_EQ(again.epsilon, c.report.epsilon);
  // Encoder and PCA shares respected.
  const std::vector<MechanismSpec> pca = {GaussianRelease{c.pca_sigma, 2}};
  EXPECT_LE(total_privacy(pca, p.delta).epsilon, p.pca_fraction * p.epsilon_target);
  const std::vector<MechanismSpec> enc = {GaussianRelease{c.pca_sigma, 2},
                                          DpEm{c.em_sigma, 3, 20}};
  EXPECT_LE(total_privacy(enc, p.delta).epsilon, p.encoder_fraction * p.epsilon_target);
}

TEST(Calibrate, InfiniteTargetSitsAtLowerBound) {
  PrivacySpec p;
  p.epsilon_target = kInf;
  const Calibration c = calibrate(p, mnist_structure());
  EXPECT_EQ(c.pca_sigma, kMinSearchSigma);
  EXPECT_EQ(c.em_sigma, kMinSearchSigma);
  EXPECT_EQ(c.sgd_sigma, kMinSearchSigma);
}

TEST(Calibrate, HalvingTargetNeverLowersNoise) {
  PrivacySpec p;
  double prev = 0.0;
  for (double eps : {16.0, 8.0, 4.0, 2.0, 1.0}) {
    p.epsilon_target = eps;
    const double s = calibrate(p, mnist_structure()).sgd_sigma;
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(Calibrate, InfeasibleTargetThrows) {
  PrivacySpec p;
  p.epsilon_target = 0.05;
  EXPECT_THROW(calibrate(p, mnist_structure()), InfeasibleBudgetError);
}

TEST(Calibrate, FixedSigmasPassThrough) {
  PipelineStructure s = mnist_structure();
  s.sgd_sigma = 1.4;
  const Calibration c = calibrate(PrivacySpec{}, s);
  EXPECT_EQ(c.sgd_sigma, 1.4);
  EXPECT_EQ(c.report.parts.size(), 3u);
}

TEST(PrivacySpec, Validation) {
  PrivacySpec p;
  EXPECT_NO_THROW(p.validate());
  p.delta = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = PrivacySpec{};
  p.epsilon_target = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = PrivacySpec{};
  p.encoder_fraction = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = PrivacySpec{};
  p.pca_fraction = 0.4;
  EXPECT_THROW(p.validate(), DomainError);
  EXPECT_DOUBLE_EQ(PrivacySpec{}.decoder_fraction(), 0.7);
}

TEST(ClipL2, Examples) {
  const Eigen::VectorXd v = Eigen::Vector2d(2.0, 0.0);
  EXPECT_TRUE(clip_l2(v, 1.0).isApprox(v / 2));
  const Eigen::VectorXd w = Eigen::Vector2d(0.3, 0.4);
  EXPECT_EQ(clip_l2(w, 1.0), w);
  EXPECT_EQ(clip_l2(Eigen::VectorXd::Zero(3), 1.0), Eigen::VectorXd::Zero(3));
}

TEST(ClipL2, BoundAndIdempotence) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd v = gaussian_noise(5, 2.0, rng);
    const double c = 0.1 + rng.uniform() * 3.0;
    const Eigen::VectorXd once = clip_l2(v, c);
    EXPECT_LE(once.norm(), c * (1 + 1e-12));
    EXPECT_EQ(clip_l2(once, c), once);
  }
}

TEST(GaussianNoise, ZeroSigmaAndMoments) {
  Rng rng(9);
  EXPECT_EQ(gaussian_noise(10, 0.0, rng), Eigen::VectorXd::Zero(10));
  const Eigen::VectorXd draws = gaussian_noise(1000000, 2.0, rng);
  EXPECT_LT(std::abs(draws.mean()), 5 * 2.0 / 1000);
  Rng a(5), b(5);
  EXPECT_EQ(gaussian_noise(100, 1.0, a), gaussian_noise(100, 1.0, b));
}

TEST(SymmetricNoise, IsSymmetric) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Eigen::MatrixXd e = symmetric_gaussian_noise(6, 1.5, rng);
    EXPECT_EQ(e, e.transpose());
  }
}

}  // namespace
}  // namespace phasegen
