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

#include "phasegen/mog.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"

namespace phasegen {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double radical_inverse(std::int64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

int nth_prime(Eigen::Index n) {
  int count = -1;
  for (int c = 2;; ++c) {
    bool prime = true;
    for (int p = 2; p * p <= c; ++p) {
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime && ++count == n) return c;
  }
}

double diag_log_normal(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                       const Eigen::VectorXd& variance) {
  const auto diff = (z - mean).array();
  return -0.5 * ((variance.array().log() + kLog2Pi).sum() +
                 (diff.square() / variance.array()).sum());
}

}  // namespace

void DiagGaussian::validate() const {
  if (mean.size() != variance.size()) {
    throw DomainError("DiagGaussian: mean and variance differ in size");
  }
  if (!(variance.array() > 0.0).all()) {
    throw DomainError("DiagGaussian: variances must be positive");
  }
}

MoG::MoG(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      variances_(std::move(variances)) {
  if (weights_.size() < 1 || means_.rows() != weights_.size() ||
      variances_.rows() != weights_.size() || variances_.cols() != means_.cols()) {
    throw DomainError("MoG: inconsistent shapes");
  }
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw DomainError("MoG: weights must lie on the simplex");
  }
  if (!(variances_.array() >= kVarianceFloor).all()) {
    throw DomainError("MoG: variances below the floor");
  }
  if (!means_.allFinite() || !variances_.allFinite()) {
    throw DomainError("MoG: non-finite parameters");
  }
}

MoG MoG::lattice_init(Eigen::Index components, Eigen::Index dim) {
  if (components < 1 || dim < 1) throw DomainError("MoG: empty shape");
  Eigen::MatrixXd means(components, dim);
  for (Eigen::Index k = 0; k < components; ++k) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      means(k, j) = 0.5 * (2.0 * radical_inverse(k + 1, nth_prime(j)) - 1.0);
    }
  }
  return MoG(Eigen::VectorXd::Constant(components, 1.0 / components),
             std::move(means), Eigen::MatrixXd::Constant(components, dim, 0.25));
}

DiagGaussian MoG::component(Eigen::Index k) const {
  return {means_.row(k).transpose(), variances_.row(k).transpose()};
}

Eigen::VectorXd MoG::log_joint(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) throw DomainError("MoG: dimension mismatch");
  Eigen::VectorXd out(components());
  for (Eigen::Index k = 0; k < components(); ++k) {
    out[k] = weights_[k] > 0.0
                 ? std::log(weights_[k]) +
                       diag_log_normal(z, means_.row(k).transpose(),
                                       variances_.row(k).transpose())
                 : kNegInf;
  }
  return out;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double hi = v.maxCoeff();
  if (hi == kNegInf) return kNegInf;
  return hi + std::log((v.array() - hi).exp().sum());
}

double MoG::log_density(const Eigen::VectorXd& z) const {
  return log_sum_exp(log_joint(z));
}

Eigen::VectorXd MoG::sample(Rng& rng) const {
  const Eigen::Index k = static_cast<Eigen::Index>(rng.categorical(
      std::span<const double>(weights_.data(), static_cast<std::size_t>(weights_.size()))));
  Eigen::VectorXd z(dim());
  for (Eigen::Index j = 0; j < dim(); ++j) {
    z[j] = means_(k, j) + std::sqrt(variances_(k, j)) * rng.normal();
  }
  return z;
}

double kl_diag_gaussians(const DiagGaussian& a, const DiagGaussian& b) {
  a.validate();
  b.validate();
  if (a.mean.size() != b.mean.size()) throw DomainError("kl: dimension mismatch");
  const auto va = a.variance.array();
  const auto vb = b.variance.array();
  const auto diff = (a.mean - b.mean).array();
  return 0.5 * ((vb / va).log() + (va + diff.square()) / vb - 1.0).sum();
}

KlWithGradient kl_gauss_to_mog_with_gradient(const DiagGaussian& q, const MoG& prior) {
  q.validate();
  if (q.mean.size() != prior.dim()) throw DomainError("kl: dimension mismatch");
  const Eigen::Index k_count = prior.components();
  Eigen::VectorXd logits(k_count);
  for (Eigen::Index b = 0; b < k_count; ++b) {
    const double w = prior.weights()[b];
    logits[b] = w > 0.0 ? std::log(w) - kl_diag_gaussians(q, prior.component(b)) : kNegInf;
  }
  const double lse = log_sum_exp(logits);
  KlWithGradient out;
  out.value = -lse;
  out.d_mean = Eigen::VectorXd::Zero(q.mean.size());
  out.d_logvar = Eigen::VectorXd::Zero(q.mean.size());
  for (Eigen::Index b = 0; b < k_count; ++b) {
    if (logits[b] == kNegInf) continue;
    const double resp = std::exp(logits[b] - lse);
    const auto vb = prior.variances().row(b).transpose().array();
    const auto mb = prior.means().row(b).transpose().array();
    out.d_mean.array() += resp * (q.mean.array() - mb) / vb;
    out.d_logvar.array() += resp * 0.5 * (q.variance.array() / vb - 1.0);
  }
  return out;
}

double kl_gauss_to_mog(const DiagGaussian& q, const MoG& prior) {
  return kl_gauss_to_mog_with_gradient(q, prior).value;
}

double mog_log_likelihood(const MoG& mog, const Eigen::MatrixXd& rows) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    total += mog.log_density(rows.row(i).transpose());
  }
  return total;
}

MoG dp_em_fit(const Eigen::MatrixXd& latents, const EmConfig& config, Rng& rng,
              const MoG* init, EmTrace* trace) {
  const Eigen::Index n = latents.rows();
  const Eigen::Index dim = latents.cols();
  const Eigen::Index k_count = config.components;
  if (config.iterations < 1) throw DomainError("dp_em: iterations must be >= 1");
  if (k_count < 1) throw DomainError("dp_em: components must be >= 1");
  if (n < k_count) throw DomainError("dp_em: need at least as many rows as components");
  if (config.sigma < 0.0) throw DomainError("dp_em: sigma must be >= 0");
  if ((latents.rowwise().squaredNorm().array() > 1.0 + 1e-12).any()) {
    throw DomainError("dp_em: rows must have L2 norm <= 1");
  }

  MoG mog = init ? *init : MoG::lattice_init(k_count, dim);
  if (mog.components() != k_count || mog.dim() != dim) {
    throw DomainError("dp_em: initial mixture has the wrong shape");
  }
  if (trace) *trace = EmTrace{};

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    // E-step: exact responsibilities.
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(k_count);
    Eigen::MatrixXd first = Eigen::MatrixXd::Zero(k_count, dim);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(k_count, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd z = latents.row(i).transpose();
      Eigen::VectorXd logits = mog.log_joint(z);
      const Eigen::VectorXd resp = (logits.array() - log_sum_exp(logits)).exp();
      mass += resp;
      first += resp * z.transpose();
      second += resp * z.cwiseProduct(z).transpose();
    }

    // Noisy release of the 2K + 1 statistics, each of L2 sensitivity <= 1.
    mass += gaussian_noise(k_count, config.sigma, rng);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      first.row(k) += gaussian_noise(dim, config.sigma, rng).transpose();
    }
    for (Eigen::Index k = 0; k < k_count; ++k) {
      second.row(k) += gaussian_noise(dim, config.sigma, rng).transpose();
    }

    // M-step from the released statistics (post-processing only).
    Eigen::VectorXd weights = mass.cwiseMax(0.0);
    const double total = weights.sum();
    if (total > 0.0) {
      weights /= total;
    } else {
      weights.setConstant(1.0 / static_cast<double>(k_count));
    }
    Eigen::MatrixXd means(k_count, dim);
    Eigen::MatrixXd variances(k_count, dim);
    // A component needs more released mass than the noise scale to yield a
    // usable mean; otherwise it is restarted at a data-independent point.
    const double dead_mass = std::max(1e-9 * static_cast<double>(n), 3.0 * config.sigma);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (mass[k] <= dead_mass) {
        for (Eigen::Index j = 0; j < dim; ++j) means(k, j) = rng.uniform() - 0.5;
        variances.row(k).setConstant(0.25);
        if (trace) ++trace->reinitialized;
        continue;
      }
      Eigen::VectorXd mu = first.row(k).transpose() / mass[k];
      // Latents lie in the unit ball, so do their means.
      const double norm = mu.norm();
      if (norm > 1.0) mu /= norm;
      means.row(k) = mu.transpose();
      const Eigen::VectorXd var =
          second.row(k).transpose() / mass[k] - mu.cwiseProduct(mu);
      variances.row(k) = var.cwiseMax(MoG::kVarianceFloor).cwiseMin(1.0).transpose();
    }
    mog = MoG(std::move(weights), std::move(means), std::move(variances));
    if (trace) trace->log_likelihood.push_back(mog_log_likelihood(mog, latents));
  }
  return mog;
}

}  // namespace phasegen
