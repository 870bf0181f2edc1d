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

// Rényi-DP accounting for the three mechanisms used by the generator:
// Gaussian releases (private PCA), noisy EM steps and subsampled noisy SGD
// steps. Values are in nats. All functions are pure.

#ifndef PHASEGEN_PRIVACY_H_
#define PHASEGEN_PRIVACY_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace phasegen {

// ε(α) tabulated over a grid of Rényi orders.
class RdpCurve {
 public:
  RdpCurve() = default;
  // Orders must be strictly increasing and > 1; values finite or +inf, >= 0.
  RdpCurve(std::vector<double> orders, std::vector<double> values);

  static RdpCurve zero(std::vector<double> orders);

  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return orders_.size(); }

  RdpCurve scaled(double factor) const;
  bool same_grid(const RdpCurve& other) const;
  double at(double order) const;

 private:
  std::vector<double> orders_;
  std::vector<double> values_;
};

// Integer orders 2..128.
std::vector<double> default_orders();

struct GaussianRelease {
  double sigma = 0.0;
  std::int64_t releases = 1;
};

struct SubsampledSgd {
  double noise_multiplier = 0.0;
  double sampling_probability = 0.0;
  std::int64_t steps = 0;
};

struct DpEm {
  double sigma = 0.0;
  std::int64_t components = 0;
  std::int64_t iterations = 0;
};

using MechanismSpec = std::variant<GaussianRelease, SubsampledSgd, DpEm>;

std::string mechanism_kind(const MechanismSpec& spec);
void validate(const MechanismSpec& spec);

struct PrivacySpec {
  double epsilon_target = 1.0;
  double delta = 1e-5;
  // Share of epsilon_target the encoding phase (PCA + EM) may consume.
  double encoder_fraction = 0.3;
  // Share of epsilon_target the PCA releases may consume on their own.
  double pca_fraction = 0.1;
  std::vector<double> orders = default_orders();

  double decoder_fraction() const { return 1.0 - encoder_fraction; }
  void validate() const;
};

struct DpConversion {
  double epsilon = 0.0;
  double order = 0.0;
};

struct MechanismBudget {
  MechanismSpec spec;
  RdpCurve curve;
  // This mechanism's RDP at the total curve's optimal order.
  double rdp_at_optimal_order = 0.0;
  // (ε, δ) this mechanism would certify on its own.
  DpConversion standalone;
};

struct BudgetReport {
  std::vector<MechanismBudget> parts;
  RdpCurve total;
  double delta = 0.0;
  double epsilon = 0.0;
  double optimal_order = 0.0;
};

// α / (2σ²): one Gaussian release of an L2-sensitivity-1 statistic.
double gaussian_rdp(double sigma, double order);

// Moment bound of one noisy EM step with K components,
// (2K+1)(λ² + λ) / (2σ²) at moment order λ.
double dpem_moment(double ma_order, std::int64_t components, double sigma);

// Closed-form moment bound of one subsampled noisy SGD step at integer moment
// order λ, sampling probability s and noise multiplier σ. Returns +inf when a
// term leaves the representable range.
double dpsgd_moment(std::int64_t ma_order, double sampling_probability,
                    double noise_multiplier);

struct RdpPoint {
  double order = 0.0;
  double epsilon = 0.0;
};

// A λ-th moment bound m gives (λ + 1, m / λ)-RDP.
RdpPoint ma_to_rdp(double ma_order, double ma_value);

RdpCurve compose(std::span<const RdpCurve> curves);

// min over the grid of ε(α) + log(1/δ)/(α − 1).
DpConversion rdp_to_dp(const RdpCurve& curve, double delta);

RdpCurve mechanism_curve(const MechanismSpec& spec,
                         const std::vector<double>& orders);

BudgetReport total_privacy(std::span<const MechanismSpec> specs, double delta,
                           const std::vector<double>& orders = default_orders());

// Shape of the full pipeline for calibration. Any sigma left empty is searched
// for; a present one is used as given.
struct PipelineStructure {
  bool use_pca = true;
  std::int64_t pca_releases = 2;
  std::int64_t components = 3;
  std::int64_t em_iterations = 20;
  double sampling_probability = 0.0;
  std::int64_t sgd_steps = 0;
  std::optional<double> pca_sigma;
  std::optional<double> em_sigma;
  std::optional<double> sgd_sigma;

  std::vector<MechanismSpec> mechanisms(double pca_sigma, double em_sigma,
                                        double sgd_sigma) const;
};

struct Calibration {
  double pca_sigma = 0.0;
  double em_sigma = 0.0;
  double sgd_sigma = 0.0;
  BudgetReport report;
};

inline constexpr double kMinSearchSigma = 1e-2;
inline constexpr double kMaxSearchSigma = 1e4;

// Finds the smallest noise scales, in order σ_p, σ_e, σ_s, such that PCA
// alone stays within pca_fraction·ε, PCA + EM within encoder_fraction·ε and
// the whole pipeline within ε. Throws InfeasibleBudgetError when a search
// fails inside [kMinSearchSigma, kMaxSearchSigma].
Calibration calibrate(const PrivacySpec& privacy,
                      const PipelineStructure& structure);

}  // namespace phasegen

#endif  // PHASEGEN_PRIVACY_H_
