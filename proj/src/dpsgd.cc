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

#include "phasegen/dpsgd.h"

#include <cmath>
#include <limits>
#include <ostream>

#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"

namespace phasegen {

void TrainConfig::validate() const {
  if (batch_size < 1) throw DomainError("train: batch size must be >= 1");
  if (!(clip_norm > 0.0)) throw DomainError("train: clip norm must be > 0");
  if (!(noise_multiplier >= 0.0)) throw DomainError("train: noise multiplier must be >= 0");
  if (noise_multiplier > 0.0 && std::isinf(clip_norm)) {
    throw DomainError("train: noise needs a finite clip norm");
  }
  if (!(learning_rate > 0.0)) throw DomainError("train: learning rate must be > 0");
  if (epochs < 0) throw DomainError("train: epochs must be >= 0");
  if (mc_samples < 1) throw DomainError("train: Monte-Carlo count must be >= 1");
}

std::int64_t TrainConfig::steps(std::int64_t n) const { return epochs * (n / batch_size); }

double TrainConfig::sampling_probability(std::int64_t n) const {
  return static_cast<double>(batch_size) / static_cast<double>(n);
}

RdpCurve make_step_curve(const TrainConfig& config, std::int64_t n,
                         const std::vector<double>& orders) {
  config.validate();
  if (n < 1) throw DomainError("train: empty dataset");
  const std::int64_t steps = config.steps(n);
  if (steps == 0) return RdpCurve::zero(orders);
  if (config.noise_multiplier == 0.0) {
    return RdpCurve(orders, std::vector<double>(orders.size(),
                                                std::numeric_limits<double>::infinity()));
  }
  return mechanism_curve(
      SubsampledSgd{config.noise_multiplier, config.sampling_probability(n), steps},
      orders);
}

TrainLog train(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& encoder_rows,
               const PcaModel& pca, const MoG& prior, VaeNets& nets,
               const TrainConfig& config, const Rng& rng,
               const std::vector<double>& orders, const ClipObserver& observer) {
  config.validate();
  const Eigen::Index n = targets.rows();
  if (encoder_rows.rows() != n) throw DomainError("train: row count mismatch");
  if (targets.cols() != nets.data_dim()) throw DomainError("train: target width mismatch");
  if (pca.reduced_dim() != nets.latent_dim()) {
    throw DomainError("train: PCA and decoder latent sizes differ");
  }

  TrainLog log;
  log.steps = config.steps(n);
  log.consumed = make_step_curve(config, n, orders);
  const Eigen::MatrixXd z_means = pca.transform_rows(encoder_rows);
  const double q = config.sampling_probability(n);
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  Rng batch_rng = rng.substream("batch");
  Rng noise_rng = rng.substream("noise");
  const Rng reparam_rng = rng.substream("reparam");

  std::vector<std::int64_t> ids;
  std::vector<double> norms;
  for (std::int64_t step = 0; step < log.steps; ++step) {
    ids.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (batch_rng.bernoulli(q)) ids.push_back(i);
    }
    StepRecord record{.step = step, .batch = static_cast<std::int64_t>(ids.size()),
                      .mean_terms = {}};
    if (ids.empty()) {
      log.records.push_back(record);
      continue;
    }

    const auto rows = static_cast<Eigen::Index>(ids.size());
    Eigen::MatrixXd xs(rows, targets.cols());
    Eigen::MatrixXd zs(rows, z_means.cols());
    for (Eigen::Index r = 0; r < rows; ++r) {
      xs.row(r) = targets.row(ids[static_cast<std::size_t>(r)]);
      zs.row(r) = z_means.row(ids[static_cast<std::size_t>(r)]);
    }
    const std::vector<ElboResult> grads = per_example_gradients(
        xs, zs, ids, nets, prior, config.mc_samples,
        reparam_rng.substream(static_cast<std::uint64_t>(step)));

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(nets.parameter_count());
    norms.clear();
    for (const ElboResult& g : grads) {
      const double norm = g.gradient.norm();
      const double f = clip_factor(norm, config.clip_norm);
      if (f == 1.0) {
        sum += g.gradient;
      } else {
        sum += f * g.gradient;
      }
      norms.push_back(norm * f);
      record.mean_terms.recon += g.terms.recon;
      record.mean_terms.kl += g.terms.kl;
      record.mean_terms.total += g.terms.total;
    }
    const double inv_rows = 1.0 / static_cast<double>(rows);
    record.mean_terms.recon *= inv_rows;
    record.mean_terms.kl *= inv_rows;
    record.mean_terms.total *= inv_rows;
    if (observer) observer(step, norms);

    if (config.noise_multiplier > 0.0) {
      sum += gaussian_noise(sum.size(), config.noise_multiplier * config.clip_norm,
                            noise_rng);
    }
    const Eigen::VectorXd noisy = sum * inv_batch;
    if (!noisy.allFinite()) {
      throw NumericalError("train: non-finite gradient at step " + std::to_string(step));
    }
    nets.add_scaled(noisy, -config.learning_rate);
    log.records.push_back(record);
  }
  return log;
}

void write_train_log(const TrainLog& log, std::ostream& out) {
  out << "step,batch,recon,kl,total\n";
  out.precision(17);
  for (const StepRecord& r : log.records) {
    out << r.step << ',' << r.batch << ',' << r.mean_terms.recon << ','
        << r.mean_terms.kl << ',' << r.mean_terms.total << '\n';
  }
}

}  // namespace phasegen
