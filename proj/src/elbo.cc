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

#include "phasegen/elbo.h"

#include <cmath>
#include <numbers>

#include "phasegen/errors.h"

namespace phasegen {
namespace {

double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

Eigen::VectorXd clamp_logvar(const Eigen::VectorXd& raw) {
  return raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
}

}  // namespace

std::string to_string(DecoderHead head) {
  return head == DecoderHead::kBernoulli ? "bernoulli" : "gaussian";
}

DecoderHead decoder_head_from_string(const std::string& name) {
  if (name == "bernoulli") return DecoderHead::kBernoulli;
  if (name == "gaussian") return DecoderHead::kGaussian;
  throw FormatError("unknown decoder head '" + name + "'");
}

VaeNets VaeNets::create(Eigen::Index data_dim, Eigen::Index latent_dim,
                        const std::vector<Eigen::Index>& hidden, DecoderHead head,
                        bool fixed_variance, Rng& rng) {
  VaeNets nets;
  nets.head = head;
  std::vector<Eigen::Index> enc{data_dim};
  enc.insert(enc.end(), hidden.begin(), hidden.end());
  enc.push_back(latent_dim);
  std::vector<Eigen::Index> dec{latent_dim};
  dec.insert(dec.end(), hidden.rbegin(), hidden.rend());
  dec.push_back(data_dim);
  Rng enc_rng = rng.substream("encoder_var");
  Rng dec_rng = rng.substream("decoder");
  if (!fixed_variance) {
    nets.encoder_var = Mlp::glorot(enc, Activation::kRelu, Activation::kIdentity, enc_rng);
  }
  nets.decoder = Mlp::glorot(
      dec, Activation::kRelu,
      head == DecoderHead::kBernoulli ? Activation::kSigmoid : Activation::kIdentity,
      dec_rng);
  return nets;
}

Eigen::Index VaeNets::parameter_count() const {
  return (encoder_var ? encoder_var->parameter_count() : 0) + decoder.parameter_count();
}

Eigen::VectorXd VaeNets::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  const Eigen::Index enc = encoder_var ? encoder_var->parameter_count() : 0;
  if (encoder_var) flat.head(enc) = encoder_var->flatten();
  flat.tail(decoder.parameter_count()) = decoder.flatten();
  return flat;
}

void VaeNets::add_scaled(const Eigen::VectorXd& direction, double scale) {
  if (direction.size() != parameter_count()) {
    throw DomainError("VaeNets: parameter size mismatch");
  }
  const Eigen::Index enc = encoder_var ? encoder_var->parameter_count() : 0;
  if (encoder_var) encoder_var->add_scaled(direction.head(enc), scale);
  decoder.add_scaled(direction.tail(decoder.parameter_count()), scale);
}

Eigen::VectorXd VaeNets::logvar(const Eigen::VectorXd& x) const {
  if (!encoder_var) return Eigen::VectorXd::Constant(latent_dim(), kLogVarMin);
  return clamp_logvar(encoder_var->predict(x));
}

Eigen::VectorXd VaeNets::decode_mean(const Eigen::VectorXd& z) const {
  return decoder.predict(z);
}

Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& noise) {
  if (mean.size() != logvar.size() || mean.size() != noise.size()) {
    throw DomainError("reparam_sample: dimension mismatch");
  }
  if (!mean.allFinite() || logvar.hasNaN()) {
    throw DomainError("reparam_sample: non-finite input");
  }
  const Eigen::ArrayXd scale = (0.5 * clamp_logvar(logvar).array()).exp();
  return mean + (scale * noise.array()).matrix();
}

Eigen::VectorXd reparam_sample(const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& logvar, Rng& rng) {
  Eigen::VectorXd noise(mean.size());
  for (Eigen::Index j = 0; j < noise.size(); ++j) noise[j] = rng.normal();
  return reparam_sample(mean, logvar, noise);
}

double bernoulli_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& probs) {
  if (x.size() != probs.size()) throw DomainError("bernoulli: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] > 0.0) acc += x[j] * std::log(probs[j]);
    if (x[j] < 1.0) acc += (1.0 - x[j]) * std::log1p(-probs[j]);
  }
  return acc;
}

double bernoulli_log_likelihood_logits(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& logits) {
  if (x.size() != logits.size()) throw DomainError("bernoulli: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    acc += x[j] * logits[j] - softplus(logits[j]);
  }
  return acc;
}

double gaussian_log_likelihood(const Eigen::VectorXd& x, const Eigen::VectorXd& mean) {
  if (x.size() != mean.size()) throw DomainError("gaussian: dimension mismatch");
  return -0.5 * (x - mean).squaredNorm() -
         0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd draw_reparam_noise(int mc_samples, Eigen::Index latent_dim, Rng& rng) {
  if (mc_samples < 1) throw DomainError("elbo: Monte-Carlo count must be >= 1");
  Eigen::MatrixXd noise(mc_samples, latent_dim);
  for (int l = 0; l < mc_samples; ++l) {
    for (Eigen::Index j = 0; j < latent_dim; ++j) noise(l, j) = rng.normal();
  }
  return noise;
}

ElboResult elbo_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z_mean,
                     const VaeNets& nets, const MoG& prior,
                     const Eigen::MatrixXd& noise) {
  const Eigen::Index latent = nets.latent_dim();
  if (x.size() != nets.data_dim() || z_mean.size() != latent ||
      noise.cols() != latent || prior.dim() != latent) {
    throw DomainError("elbo: dimension mismatch");
  }
  if (noise.rows() < 1) throw DomainError("elbo: Monte-Carlo count must be >= 1");
  const double inv_l = 1.0 / static_cast<double>(noise.rows());
  const Eigen::Index enc_count = nets.encoder_var ? nets.encoder_var->parameter_count() : 0;

  ElboResult result;
  result.gradient = Eigen::VectorXd::Zero(nets.parameter_count());

  Mlp::Trace enc_trace;
  Eigen::VectorXd logvar;
  if (nets.encoder_var) {
    enc_trace = nets.encoder_var->forward(x);
    logvar = clamp_logvar(enc_trace.output);
  } else {
    logvar = Eigen::VectorXd::Constant(latent, kLogVarMin);
  }
  const Eigen::ArrayXd scale = (0.5 * logvar.array()).exp();

  const KlWithGradient kl =
      kl_gauss_to_mog_with_gradient(DiagGaussian{z_mean, logvar.array().exp()}, prior);
  Eigen::VectorXd d_logvar = kl.d_logvar;

  double recon = 0.0;
  auto dec_grad = result.gradient.tail(nets.decoder.parameter_count());
  for (Eigen::Index l = 0; l < noise.rows(); ++l) {
    const Eigen::ArrayXd eps = noise.row(l).transpose().array();
    const Eigen::VectorXd z = z_mean + (scale * eps).matrix();
    const Mlp::Trace trace = nets.decoder.forward(z);
    const Eigen::VectorXd& logits = trace.pre.back();
    Eigen::VectorXd d_logits;
    if (nets.head == DecoderHead::kBernoulli) {
      recon += bernoulli_log_likelihood_logits(x, logits);
      d_logits = logits.unaryExpr([](double a) { return sigmoid(a); }) - x;
    } else {
      recon += gaussian_log_likelihood(x, logits);
      d_logits = logits - x;
    }
    d_logits *= inv_l;
    const Eigen::VectorXd d_z = nets.decoder.backward(trace, d_logits, dec_grad);
    d_logvar.array() += d_z.array() * 0.5 * scale * eps;
  }
  recon *= inv_l;

  if (nets.encoder_var) {
    // The clamp passes gradient only inside its range.
    const Eigen::VectorXd& raw = enc_trace.output;
    const Eigen::VectorXd d_raw =
        ((raw.array() >= kLogVarMin) && (raw.array() <= kLogVarMax)).select(d_logvar, 0.0);
    nets.encoder_var->backward(enc_trace, d_raw, result.gradient.head(enc_count));
  }

  result.terms.recon = recon;
  result.terms.kl = kl.value;
  result.terms.total = -recon + kl.value;
  if (!std::isfinite(result.terms.total) || !result.gradient.allFinite()) {
    throw NumericalError("elbo: non-finite loss or gradient (recon=" +
                         std::to_string(recon) + ", kl=" + std::to_string(kl.value) + ")");
  }
  return result;
}

ElboResult elbo_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& z_mean,
                     const VaeNets& nets, const MoG& prior, int mc_samples,
                     Rng& rng) {
  return elbo_loss(x, z_mean, nets, prior,
                   draw_reparam_noise(mc_samples, nets.latent_dim(), rng));
}

std::vector<ElboResult> per_example_gradients(const Eigen::MatrixXd& xs,
                                              const Eigen::MatrixXd& z_means,
                                              std::span<const std::int64_t> ids,
                                              const VaeNets& nets, const MoG& prior,
                                              int mc_samples, const Rng& rng) {
  if (xs.rows() == 0) throw DomainError("per_example_gradients: empty batch");
  if (z_means.rows() != xs.rows() || static_cast<Eigen::Index>(ids.size()) != xs.rows()) {
    throw DomainError("per_example_gradients: batch size mismatch");
  }
  std::vector<ElboResult> out;
  out.reserve(static_cast<std::size_t>(xs.rows()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    Rng example_rng = rng.substream(static_cast<std::uint64_t>(ids[static_cast<std::size_t>(i)]));
    out.push_back(elbo_loss(xs.row(i).transpose(), z_means.row(i).transpose(), nets,
                            prior, mc_samples, example_rng));
  }
  return out;
}

}  // namespace phasegen
