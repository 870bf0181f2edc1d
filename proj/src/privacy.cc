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

#include "phasegen/privacy.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "phasegen/errors.h"

namespace phasegen {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log((n)!!) with (0)!! = (-1)!! = 1.
double log_double_factorial(std::int64_t n) {
  double acc = 0.0;
  for (std::int64_t k = n; k > 1; k -= 2) acc += std::log(static_cast<double>(k));
  return acc;
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

bool is_integer(double x) { return std::floor(x) == x; }

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

RdpCurve::RdpCurve(std::vector<double> orders, std::vector<double> values)
    : orders_(std::move(orders)), values_(std::move(values)) {
  if (orders_.size() != values_.size()) {
    throw DomainError("RdpCurve: orders and values differ in length");
  }
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    if (!(orders_[i] > 1.0) || !std::isfinite(orders_[i])) {
      throw DomainError("RdpCurve: every order must be finite and > 1");
    }
    if (i > 0 && !(orders_[i] > orders_[i - 1])) {
      throw DomainError("RdpCurve: orders must be strictly increasing");
    }
    if (std::isnan(values_[i]) || values_[i] < 0.0) {
      throw DomainError("RdpCurve: values must be nonnegative");
    }
  }
}

RdpCurve RdpCurve::zero(std::vector<double> orders) {
  std::vector<double> values(orders.size(), 0.0);
  return RdpCurve(std::move(orders), std::move(values));
}

RdpCurve RdpCurve::scaled(double factor) const {
  require(factor >= 0.0, "RdpCurve::scaled: negative factor");
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // 0 · inf stays 0: a mechanism run zero times costs nothing.
    v[i] = factor == 0.0 ? 0.0 : factor * values_[i];
  }
  return RdpCurve(orders_, std::move(v));
}

bool RdpCurve::same_grid(const RdpCurve& other) const {
  return orders_ == other.orders_;
}

double RdpCurve::at(double order) const {
  auto it = std::find(orders_.begin(), orders_.end(), order);
  if (it == orders_.end()) throw DomainError("RdpCurve::at: order not on grid");
  return values_[static_cast<std::size_t>(it - orders_.begin())];
}

std::vector<double> default_orders() {
  std::vector<double> orders;
  for (int a = 2; a <= 128; ++a) orders.push_back(a);
  return orders;
}

std::string mechanism_kind(const MechanismSpec& spec) {
  struct Visitor {
    std::string operator()(const GaussianRelease&) const { return "gaussian_release"; }
    std::string operator()(const SubsampledSgd&) const { return "subsampled_sgd"; }
    std::string operator()(const DpEm&) const { return "dp_em"; }
  };
  return std::visit(Visitor{}, spec);
}

void validate(const MechanismSpec& spec) {
  struct Visitor {
    void operator()(const GaussianRelease& g) const {
      require(g.sigma > 0.0, "gaussian_release: sigma must be > 0");
      require(g.releases >= 1, "gaussian_release: releases must be >= 1");
    }
    void operator()(const SubsampledSgd& s) const {
      require(s.noise_multiplier > 0.0, "subsampled_sgd: noise multiplier must be > 0");
      require(s.sampling_probability > 0.0 && s.sampling_probability < 1.0,
              "subsampled_sgd: sampling probability must lie in (0, 1)");
      require(s.steps >= 1, "subsampled_sgd: steps must be >= 1");
    }
    void operator()(const DpEm& e) const {
      require(e.sigma > 0.0, "dp_em: sigma must be > 0");
      require(e.components >= 1, "dp_em: components must be >= 1");
      require(e.iterations >= 1, "dp_em: iterations must be >= 1");
    }
  };
  std::visit(Visitor{}, spec);
}

void PrivacySpec::validate() const {
  require(epsilon_target > 0.0 && !std::isnan(epsilon_target),
          "privacy: epsilon target must be > 0");
  require(delta > 0.0 && delta < 1.0, "privacy: delta must lie in (0, 1)");
  require(encoder_fraction > 0.0 && encoder_fraction < 1.0,
          "privacy: encoder fraction must lie in (0, 1)");
  require(pca_fraction > 0.0 && pca_fraction < encoder_fraction,
          "privacy: pca fraction must lie in (0, encoder fraction)");
  RdpCurve::zero(orders);  // grid validation
  require(!orders.empty(), "privacy: empty order grid");
}

double gaussian_rdp(double sigma, double order) {
  require(sigma > 0.0, "gaussian_rdp: sigma must be > 0");
  require(order > 1.0, "gaussian_rdp: order must be > 1");
  if (std::isinf(sigma)) return 0.0;
  return order / (2.0 * sigma * sigma);
}

double dpem_moment(double ma_order, std::int64_t components, double sigma) {
  require(ma_order >= 1.0, "dpem_moment: moment order must be >= 1");
  require(components >= 1, "dpem_moment: components must be >= 1");
  require(sigma > 0.0, "dpem_moment: sigma must be > 0");
  if (std::isinf(sigma)) return 0.0;
  const double k = static_cast<double>(components);
  return (2.0 * k + 1.0) * (ma_order * ma_order + ma_order) / (2.0 * sigma * sigma);
}

double dpsgd_moment(std::int64_t ma_order, double sampling_probability,
                    double noise_multiplier) {
  const double s = sampling_probability;
  const double sigma = noise_multiplier;
  require(ma_order >= 1, "dpsgd_moment: moment order must be >= 1");
  require(s >= 0.0 && s < 1.0, "dpsgd_moment: sampling probability must lie in [0, 1)");
  require(sigma > 0.0, "dpsgd_moment: noise multiplier must be > 0");
  if (s == 0.0 || std::isinf(sigma)) return 0.0;

  const double lam = static_cast<double>(ma_order);
  const double log_s = std::log(s);
  const double log_2s = std::log(2.0 * s);
  const double log_1ms = std::log1p(-s);
  const double log_sigma = std::log(sigma);
  const double log_max = std::log(std::numeric_limits<double>::max());

  double total = s * s * lam * (lam - 1.0) / ((1.0 - s) * sigma * sigma);
  // Terms are formed in log space; any one that would overflow a double makes
  // the whole bound +inf.
  auto add = [&](double log_term) {
    if (log_term > log_max) return false;
    total += std::exp(log_term);
    return true;
  };
  for (std::int64_t t = 3; t <= ma_order + 1; ++t) {
    const double td = static_cast<double>(t);
    const double log_df = log_double_factorial(t - 1);
    const double first = td * log_2s + log_df - std::log(2.0) -
                         (td - 1.0) * log_1ms - td * log_sigma;
    const double second = td * log_s - td * log_1ms - 2.0 * td * log_sigma;
    const double third = td * log_2s + (td * td - td) / (2.0 * sigma * sigma) +
                         log_add_exp(td * log_sigma + log_df, td * std::log(td)) -
                         std::log(2.0) - (td - 1.0) * log_1ms -
                         2.0 * td * log_sigma;
    if (!add(first) || !add(second) || !add(third)) return kInf;
  }
  return std::isfinite(total) ? total : kInf;
}

RdpPoint ma_to_rdp(double ma_order, double ma_value) {
  require(ma_order >= 1.0, "ma_to_rdp: moment order must be >= 1");
  require(ma_value >= 0.0, "ma_to_rdp: moment value must be >= 0");
  return {ma_order + 1.0, ma_value / ma_order};
}

RdpCurve compose(std::span<const RdpCurve> curves) {
  if (curves.empty()) throw DomainError("compose: no curves given");
  std::vector<double> sum(curves.front().size(), 0.0);
  for (const RdpCurve& c : curves) {
    if (!c.same_grid(curves.front())) {
      throw GridMismatchError("compose: curves use different order grids");
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c.values()[i];
  }
  return RdpCurve(curves.front().orders(), std::move(sum));
}

DpConversion rdp_to_dp(const RdpCurve& curve, double delta) {
  require(delta > 0.0 && delta < 1.0, "rdp_to_dp: delta must lie in (0, 1)");
  if (curve.size() == 0) throw DomainError("rdp_to_dp: empty order grid");
  const double log_inv_delta = std::log(1.0 / delta);
  DpConversion best{kInf, curve.orders().front()};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double a = curve.orders()[i];
    const double eps = curve.values()[i] + log_inv_delta / (a - 1.0);
    if (eps < best.epsilon) best = {eps, a};
  }
  return best;
}

RdpCurve mechanism_curve(const MechanismSpec& spec,
                         const std::vector<double>& orders) {
  validate(spec);
  std::vector<double> values(orders.size());
  struct Visitor {
    double order;
    double operator()(const GaussianRelease& g) const {
      return static_cast<double>(g.releases) * gaussian_rdp(g.sigma, order);
    }
    double operator()(const SubsampledSgd& s) const {
      if (!is_integer(order)) {
        throw DomainError("subsampled_sgd accounting needs integer orders");
      }
      const auto lam = static_cast<std::int64_t>(order) - 1;
      const RdpPoint step = ma_to_rdp(
          static_cast<double>(lam),
          dpsgd_moment(lam, s.sampling_probability, s.noise_multiplier));
      return static_cast<double>(s.steps) * step.epsilon;
    }
    double operator()(const DpEm& e) const {
      const double lam = order - 1.0;
      if (lam < 1.0) throw DomainError("dp_em accounting needs orders >= 2");
      const RdpPoint step = ma_to_rdp(lam, dpem_moment(lam, e.components, e.sigma));
      return static_cast<double>(e.iterations) * step.epsilon;
    }
  };
  for (std::size_t i = 0; i < orders.size(); ++i) {
    values[i] = std::visit(Visitor{orders[i]}, spec);
  }
  return RdpCurve(orders, std::move(values));
}

BudgetReport total_privacy(std::span<const MechanismSpec> specs, double delta,
                           const std::vector<double>& orders) {
  if (specs.empty()) throw DomainError("total_privacy: no mechanisms given");
  BudgetReport report{.parts = {}, .total = RdpCurve::zero(orders), .delta = delta};
  std::vector<RdpCurve> curves;
  for (const MechanismSpec& spec : specs) {
    curves.push_back(mechanism_curve(spec, orders));
  }
  report.total = compose(curves);
  const DpConversion dp = rdp_to_dp(report.total, delta);
  report.epsilon = dp.epsilon;
  report.optimal_order = dp.order;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    report.parts.push_back(MechanismBudget{
        .spec = specs[i],
        .curve = curves[i],
        .rdp_at_optimal_order = curves[i].at(dp.order),
        .standalone = rdp_to_dp(curves[i], delta),
    });
  }
  return report;
}

std::vector<MechanismSpec> PipelineStructure::mechanisms(double pca_sigma_value,
                                                         double em_sigma_value,
                                                         double sgd_sigma_value) const {
  std::vector<MechanismSpec> specs;
  if (use_pca) specs.push_back(GaussianRelease{pca_sigma_value, pca_releases});
  specs.push_back(DpEm{em_sigma_value, components, em_iterations});
  if (sgd_steps > 0) {
    specs.push_back(SubsampledSgd{sgd_sigma_value, sampling_probability, sgd_steps});
  }
  return specs;
}

namespace {

// Smallest sigma in [lo, hi] with epsilon_of(sigma) <= target, assuming
// epsilon_of is nonincreasing. The returned sigma always satisfies the target.
double search_sigma(const std::function<double(double)>& epsilon_of,
                    double target, const char* what) {
  double lo = kMinSearchSigma;
  double hi = kMaxSearchSigma;
  if (std::isinf(target) || epsilon_of(lo) <= target) return lo;
  if (!(epsilon_of(hi) <= target)) {
    std::ostringstream msg;
    msg << "calibrate: no " << what << " in [" << lo << ", " << hi
        << "] reaches epsilon " << target;
    throw InfeasibleBudgetError(msg.str());
  }
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (epsilon_of(mid) <= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

Calibration calibrate(const PrivacySpec& privacy,
                      const PipelineStructure& structure) {
  privacy.validate();
  const double eps = privacy.epsilon_target;
  const auto& orders = privacy.orders;
  auto epsilon_for = [&](std::vector<MechanismSpec> specs) {
    return total_privacy(specs, privacy.delta, orders).epsilon;
  };

  Calibration out;
  if (!structure.use_pca) {
    out.pca_sigma = 0.0;
  } else if (structure.pca_sigma) {
    out.pca_sigma = *structure.pca_sigma;
  } else {
    out.pca_sigma = search_sigma(
        [&](double s) {
          return epsilon_for({GaussianRelease{s, structure.pca_releases}});
        },
        privacy.pca_fraction * eps, "PCA sigma");
  }

  if (structure.em_sigma) {
    out.em_sigma = *structure.em_sigma;
  } else {
    out.em_sigma = search_sigma(
        [&](double s) {
          PipelineStructure enc = structure;
          enc.sgd_steps = 0;
          return epsilon_for(enc.mechanisms(out.pca_sigma, s, 1.0));
        },
        privacy.encoder_fraction * eps, "EM sigma");
  }

  if (structure.sgd_steps <= 0) {
    out.sgd_sigma = structure.sgd_sigma.value_or(kMinSearchSigma);
  } else if (structure.sgd_sigma) {
    out.sgd_sigma = *structure.sgd_sigma;
  } else {
    out.sgd_sigma = search_sigma(
        [&](double s) {
          return epsilon_for(structure.mechanisms(out.pca_sigma, out.em_sigma, s));
        },
        eps, "SGD noise multiplier");
  }

  const auto specs = structure.mechanisms(out.pca_sigma, out.em_sigma, out.sgd_sigma);
  out.report = total_privacy(specs, privacy.delta, orders);
  return out;
}

}  // namespace phasegen
