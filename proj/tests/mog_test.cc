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
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.h"
#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"
#include "phasegen/mog.h"

namespace phasegen {
namespace {

MoG three_component() {
  Eigen::VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  Eigen::MatrixXd mu(3, 2), var(3, 2);
  mu << -0.5, 0.1, 0.3, 0.3, 0.0, -0.6;
  var << 0.04, 0.09, 0.01, 0.02, 0.25, 0.05;
  return MoG(w, mu, var);
}

TEST(Mog, StandardNormalDensityAtOrigin) {
  const MoG m(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1));
  EXPECT_NEAR(m.log_density(Eigen::VectorXd::Zero(1)), -0.5 * std::log(2.0 * std::numbers::pi),
              1e-15);
  EXPECT_NEAR(m.log_density(Eigen::VectorXd::Zero(1)), -0.9189385332, 1e-9);
}

TEST(Mog, LogDensityMatchesLinearSpaceSum) {
  const MoG m = three_component();
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd z = gaussian_noise(2, 0.5, rng);
    const long double want =
        std::log(oracle::mog_density(m.weights(), m.means(), m.variances(), z));
    EXPECT_NEAR(m.log_density(z), static_cast<double>(want), 1e-10);
  }
}

TEST(Mog, FarTailStaysFinite) {
  const MoG m = three_component();
  const double v = m.log_density(Eigen::VectorXd::Constant(2, 40.0));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -1000.0);
}

TEST(Mog, PermutationInvariant) {
  const MoG m = three_component();
  const std::vector<int> order = {2, 0, 1};
  Eigen::VectorXd w(3);
  Eigen::MatrixXd mu(3, 2), var(3, 2);
  for (int k = 0; k < 3; ++k) {
    w[k] = m.weights()[order[k]];
    mu.row(k) = m.means().row(order[k]);
    var.row(k) = m.variances().row(order[k]);
  }
  const MoG p(w, mu, var);
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd z = gaussian_noise(2, 0.5, rng);
    EXPECT_NEAR(m.log_density(z), p.log_density(z), 1e-12);
  }
}

TEST(Mog, SampleComponentFrequencies) {
  // Components sit far apart, so the nearest mean identifies the draw.
  Eigen::VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  Eigen::MatrixXd mu(3, 1);
  mu << -10.0, 0.0, 10.0;
  const MoG m(w, mu, Eigen::MatrixXd::Constant(3, 1, 0.01));
  Rng rng(5);
  const int n = 20000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  double sum_dev = 0.0;
  for (int t = 0; t < n; ++t) {
    const double z = m.sample(rng)[0];
    const int k = z < -5.0 ? 0 : (z > 5.0 ? 2 : 1);
    counts[k] += 1.0;
    sum_dev += (z - mu(k, 0)) * (z - mu(k, 0));
  }
  for (int k = 0; k < 3; ++k) {
    const double sd = std::sqrt(n * w[k] * (1.0 - w[k]));
    EXPECT_NEAR(counts[k], n * w[k], 3.0 * sd) << k;
  }
  EXPECT_NEAR(sum_dev / n, 0.01, 0.01 * 0.05);
}

TEST(Mog, FloorVarianceConcentratesSamples) {
  const MoG m(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(1, 3, 0.2),
              Eigen::MatrixXd::Constant(1, 3, MoG::kVarianceFloor));
  Rng rng(6);
  for (int t = 0; t < 1000; ++t) {
    EXPECT_LE((m.sample(rng).array() - 0.2).abs().maxCoeff(), 6.0e-3);
  }
}

TEST(Mog, RejectsBadParameters) {
  Eigen::VectorXd w(2);
  w << 0.6, 0.6;
  EXPECT_THROW(MoG(w, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Ones(2, 1)), DomainError);
  w << 0.5, 0.5;
  EXPECT_THROW(MoG(w, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Constant(2, 1, 1e-8)),
               DomainError);
  EXPECT_THROW(MoG(w, Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Ones(3, 1)), DomainError);
  EXPECT_THROW(three_component().log_density(Eigen::VectorXd::Zero(3)), DomainError);
}

TEST(MogKl, DiagGaussianClosedForm) {
  const DiagGaussian a{Eigen::Vector2d(0.1, -0.2), Eigen::Vector2d(0.5, 2.0)};
  const DiagGaussian b{Eigen::Vector2d(-0.3, 0.4), Eigen::Vector2d(1.5, 0.7)};
  double want = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double d = a.mean[j] - b.mean[j];
    want += 0.5 * (std::log(b.variance[j] / a.variance[j]) +
                   (a.variance[j] + d * d) / b.variance[j] - 1.0);
  }
  EXPECT_NEAR(kl_diag_gaussians(a, b), want, 1e-14);
  EXPECT_EQ(kl_diag_gaussians(a, a), 0.0);
}

TEST(MogKl, SingleComponentIsExact) {
  const DiagGaussian q{Eigen::Vector3d(0.2, -0.1, 0.4), Eigen::Vector3d(0.3, 0.5, 0.1)};
  const DiagGaussian p{Eigen::Vector3d(0.0, 0.3, -0.2), Eigen::Vector3d(0.6, 0.2, 0.4)};
  const MoG prior(Eigen::VectorXd::Ones(1), p.mean.transpose(), p.variance.transpose());
  EXPECT_NEAR(kl_gauss_to_mog(q, prior), kl_diag_gaussians(q, p), 1e-12);
}

// Monte Carlo estimate of the true KL and its standard error.
std::pair<double, double> mc_kl(const DiagGaussian& q, const MoG& prior, int n, Rng& rng) {
  const MoG qm(Eigen::VectorXd::Ones(1), q.mean.transpose(), q.variance.transpose());
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const Eigen::VectorXd z = qm.sample(rng);
    const double v = qm.log_density(z) - prior.log_density(z);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

TEST(MogKl, MatchesTrueKlForSeparatedPrior) {
  Eigen::VectorXd w(2);
  w << 0.3, 0.7;
  Eigen::MatrixXd mu(2, 2);
  mu << 0.0, 0.0, 30.0, 30.0;
  const MoG prior(w, mu, Eigen::MatrixXd::Constant(2, 2, 0.5));
  const DiagGaussian q{Eigen::Vector2d(0.2, -0.1), Eigen::Vector2d(0.3, 0.4)};
  Rng rng(7);
  const auto [mc, se] = mc_kl(q, prior, 200000, rng);
  EXPECT_NEAR(kl_gauss_to_mog(q, prior), mc, 4.0 * se + 1e-9);
}

TEST(MogKl, UpperBoundsTrueKl) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd raw = gaussian_noise(2, 1.0, rng).array().abs() + 0.1;
    const MoG prior(raw / raw.sum(), gaussian_noise(2, 2, 0.5, rng),
                    (gaussian_noise(2, 2, 0.5, rng).array().abs() + 0.05).matrix());
    const DiagGaussian q{gaussian_noise(2, 0.5, rng),
                         (gaussian_noise(2, 0.3, rng).array().abs() + 0.05).matrix()};
    const auto [mc, se] = mc_kl(q, prior, 50000, rng);
    EXPECT_GE(kl_gauss_to_mog(q, prior), mc - 4.0 * se) << trial;
  }
}

TEST(MogKl, GradientMatchesFiniteDifferences) {
  const MoG prior = three_component();
  const DiagGaussian q{Eigen::Vector2d(0.05, -0.1), Eigen::Vector2d(0.2, 0.1)};
  const KlWithGradient g = kl_gauss_to_mog_with_gradient(q, prior);
  EXPECT_NEAR(g.value, kl_gauss_to_mog(q, prior), 1e-14);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    DiagGaussian up = q, dn = q;
    up.mean[j] += h;
    dn.mean[j] -= h;
    EXPECT_NEAR(g.d_mean[j], (kl_gauss_to_mog(up, prior) - kl_gauss_to_mog(dn, prior)) / (2 * h),
                1e-6);
    up = q;
    dn = q;
    up.variance[j] *= std::exp(h);
    dn.variance[j] *= std::exp(-h);
    EXPECT_NEAR(g.d_logvar[j],
                (kl_gauss_to_mog(up, prior) - kl_gauss_to_mog(dn, prior)) / (2 * h), 1e-6);
  }
}

Eigen::MatrixXd two_clusters(int n, Rng& rng) {
  Eigen::MatrixXd z(n, 2);
  for (int i = 0; i < n; ++i) {
    const double c = i < n / 2 ? 0.5 : -0.5;
    z(i, 0) = c + 0.05 * rng.normal();
    z(i, 1) = -c + 0.05 * rng.normal();
  }
  return z;
}

TEST(MogEm, SingleComponentRecoversMoments) {
  Rng data(9);
  Eigen::MatrixXd z = gaussian_noise(500, 3, 0.2, data);
  z.rowwise() += Eigen::RowVector3d(0.1, -0.2, 0.05);
  for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) = clip_l2(z.row(i).transpose(), 1.0);
  Rng rng(0);
  const MoG m = dp_em_fit(z, EmConfig{1, 3, 0.0}, rng);
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd var =
      (z.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(z.rows());
  EXPECT_LE((m.means().row(0) - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((m.variances().row(0) - var).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(m.weights()[0], 1.0);
}

TEST(MogEm, SeparatesTwoClusters) {
  Rng data(10);
  const Eigen::MatrixXd z = two_clusters(1000, data);
  Rng rng(1);
  const MoG m = dp_em_fit(z, EmConfig{2, 20, 0.0}, rng);
  for (const double sign : {1.0, -1.0}) {
    const Eigen::RowVector2d target(0.5 * sign, -0.5 * sign);
    double best = 1e9;
    for (int k = 0; k < 2; ++k) best = std::min(best, (m.means().row(k) - target).norm());
    EXPECT_LE(best, 0.05);
  }
  EXPECT_NEAR(m.weights()[0], 0.5, 0.01);
}

TEST(MogEm, LikelihoodNonDecreasingWithoutNoise) {
  Rng data(11);
  const Eigen::MatrixXd z = two_clusters(600, data);
  Rng rng(2);
  EmTrace trace;
  dp_em_fit(z, EmConfig{3, 25, 0.0}, rng, nullptr, &trace);
  ASSERT_EQ(trace.log_likelihood.size(), 25u);
  for (std::size_t t = 1; t < trace.log_likelihood.size(); ++t) {
    EXPECT_GE(trace.log_likelihood[t], trace.log_likelihood[t - 1] - 1e-9) << t;
  }
}

TEST(MogEm, NoisyFitStaysValid) {
  Rng data(12);
  const Eigen::MatrixXd z = two_clusters(200, data);
  for (double sigma : {0.5, 5.0, 500.0}) {
    Rng rng(3);
    const MoG m = dp_em_fit(z, EmConfig{4, 10, sigma}, rng);
    EXPECT_NEAR(m.weights().sum(), 1.0, 1e-12);
    EXPECT_GE(m.weights().minCoeff(), 0.0);
    EXPECT_GE(m.variances().minCoeff(), MoG::kVarianceFloor);
    EXPECT_TRUE(m.means().allFinite());
    EXPECT_LE(m.means().rowwise().norm().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(MogEm, DeterministicForSeed) {
  Rng data(13);
  const Eigen::MatrixXd z = two_clusters(200, data);
  Rng a(4), b(4);
  const MoG m1 = dp_em_fit(z, EmConfig{3, 5, 2.0}, a);
  const MoG m2 = dp_em_fit(z, EmConfig{3, 5, 2.0}, b);
  EXPECT_EQ(m1.means(), m2.means());
  EXPECT_EQ(m1.variances(), m2.variances());
  EXPECT_EQ(m1.weights(), m2.weights());
}

TEST(MogEm, LatticeInitIgnoresData) {
  const MoG a = MoG::lattice_init(4, 3);
  const MoG b = MoG::lattice_init(4, 3);
  EXPECT_EQ(a.means(), b.means());
  EXPECT_LE(a.means().cwiseAbs().maxCoeff(), 0.5);
  EXPECT_NE(a.means().row(0), a.means().row(1));
}

TEST(MogEm, Errors) {
  Rng rng(0);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_THROW(dp_em_fit(z, EmConfig{4, 5, 0.0}, rng), DomainError);
  EXPECT_THROW(dp_em_fit(z, EmConfig{2, 0, 0.0}, rng), DomainError);
  EXPECT_THROW(dp_em_fit(z, EmConfig{2, 5, -1.0}, rng), DomainError);
  EXPECT_THROW(dp_em_fit(Eigen::MatrixXd::Ones(3, 2), EmConfig{2, 5, 0.0}, rng), DomainError);
}

}  // namespace
}  // namespace phasegen
