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

// Variational objective with a frozen encoder mean. The encoder only learns
// the log-variance of q(z|x); its mean is supplied by the caller (the PCA
// projection of x).

#ifndef PHASEGEN_ELBO_H_
#define PHASEGEN_ELBO_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasegen/mlp.h"
#include "phasegen/mog.h"
#include "phasegen/random.h"

namespace phasegen {

enum class DecoderHead { kBernoulli, kGaussian };

std::string to_string(DecoderHead head);
DecoderHead decoder_head_from_string(const std::string& name);

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 2.0;

struct VaeNets {
  // Absent in the autoencoder variant, where the posterior variance is pinned
  // at exp(kLogVarMin).
  std::optional<Mlp> encoder_var;
  Mlp decoder;
  DecoderHead head = DecoderHead::kBernoulli;

  // widths: hidden layer sizes shared by both nets.
  static VaeNets create(Eigen::Index data_dim, Eigen::Index latent_dim,
                        const std::vector<Eigen::Index>& hidden, DecoderHead head,
                        bool fixed_variance, Rng& rng);

  // Flat layout: encoder_var parameters (if present), then decoder.
  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void add_scaled(const Eigen::VectorXd& direction, double scale);

  Eigen::Index latent_dim() const { return decoder.input_dim(); }
  Eigen::Index data_dim() const { return decoder.output_dim(); }

  // Log-variance of q(z|x), clamped to [kLogVarMin, kLogVarMax].
  Eigen::VectorXd logvar(const Eigen::VectorXd& x) const;
  // Decoder mean: sigmoid probabilities or the Gaussian mean.
  Eigen::VectorXd decode_mean(const Eigen::VectorXd& z) const;
};

struct ElboTerms {
  double recon = 0.0;  // Monte-Carlo average of log p(x | z)
  double kl = 0.0;
  double total = 0.0;  // -recon + kl, the loss minimized
};

struct ElboResult {
  ElboTerms terms;
  Eigen::VectorXd gradient;  // d total / d params, VaeNets flat layout
};

// mean + exp(logvar / 2) ⊙ noise, with logvar clamped as above.
Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& noise);
Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& logvar, Rng& rng);

// Σ_j x_j log p_j + (1 - x_j) log(1 - p_j), with 0 log 0 = 0.
double bernoulli_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& probs);
// Same quantity from logits, numerically stable.
double bernoulli_log_likelihood_logits(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& logits);
// Unit-variance Gaussian log-likelihood.
double gaussian_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& mean);

// Loss and exact gradient for one record. noise is L × latent_dim standard
// normal draws, one row per Monte-Carlo sample.
ElboResult elbo_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z_mean,
                     const VaeNets& nets, const MoG& prior,
                     const Eigen::MatrixXd& noise);
ElboResult elbo_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z_mean,
                     const VaeNets& nets, const MoG& prior, int mc_samples,
                     Rng& rng);

// Standard normal draws for elbo_loss.
Eigen::MatrixXd draw_reparam_noise(int mc_samples, Eigen::Index latent_dim, Rng& rng);

// One gradient per row of xs. Row i draws its noise from
// rng.substream(ids[i]), so an example's gradient does not depend on its
// position in the batch.
std::vector<ElboResult> per_example_gradients(const Eigen::MatrixXd& xs,
                                              const Eigen::MatrixXd& z_means,
                                              std::span<const std::int64_t> ids,
                                              const VaeNets& nets, const MoG& prior,
                                              int mc_samples, const Rng& rng);

}  // namespace phasegen

#endif  // PHASEGEN_ELBO_H_
