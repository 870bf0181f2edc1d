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

#ifndef PHASEGEN_MOG_H_
#define PHASEGEN_MOG_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "phasegen/random.h"

namespace phasegen {

struct DiagGaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;

  void validate() const;
};

// Mixture of diagonal Gaussians; the latent prior and sampling source.
class MoG {
 public:
  static constexpr double kVarianceFloor = 1e-6;

  MoG() = default;
  // weights: K; means, variances: K × dim. Checks the simplex and the
  // variance floor.
  MoG(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances);

  // Data-independent starting point: uniform weights, variances 0.25, means
  // on a Halton lattice over [-1, 1]^dim scaled by 0.5.
  static MoG lattice_init(Eigen::Index components, Eigen::Index dim);

  double log_density(const Eigen::VectorXd& z) const;
  Eigen::VectorXd sample(Rng& rng) const;

  Eigen::Index components() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.cols(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& variances() const { return variances_; }
  DiagGaussian component(Eigen::Index k) const;

  // Per-component log(π_k) + log N(z; μ_k, Σ_k).
  Eigen::VectorXd log_joint(const Eigen::VectorXd& z) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd variances_;
};

double log_sum_exp(const Eigen::VectorXd& v);

double kl_diag_gaussians(const DiagGaussian& a, const DiagGaussian& b);

// Variational approximation of KL(q ‖ prior) with q a single Gaussian:
// -log Σ_b π_b exp(-KL(q ‖ N_b)).
double kl_gauss_to_mog(const DiagGaussian& q, const MoG& prior);

struct KlWithGradient {
  double value = 0.0;
  Eigen::VectorXd d_mean;
  // Derivative with respect to log q.variance.
  Eigen::VectorXd d_logvar;
};

// Same value as kl_gauss_to_mog, plus its gradient.
KlWithGradient kl_gauss_to_mog_with_gradient(const DiagGaussian& q, const MoG& prior);

struct EmConfig {
  std::int64_t components = 3;
  std::int64_t iterations = 20;
  // Noise standard deviation on each released sufficient statistic.
  double sigma = 0.0;
};

struct EmTrace {
  // Training log-likelihood after each M-step.
  std::vector<double> log_likelihood;
  std::int64_t reinitialized = 0;
};

// Noisy EM on latent rows with ‖z‖₂ <= 1. Every M-step releases the
// responsibility masses (one K-vector) and, per component, the weighted
// first and second moments, each with N(0, σ²) noise; these are the 2K + 1
// releases one DP-EM step is charged for. Parameters are then derived from
// the noisy statistics.
MoG dp_em_fit(const Eigen::MatrixXd& latents, const EmConfig& config, Rng& rng,
              const MoG* init = nullptr, EmTrace* trace = nullptr);

double mog_log_likelihood(const MoG& mog, const Eigen::MatrixXd& rows);

}  // namespace phasegen

#endif  // PHASEGEN_MOG_H_
