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

// Decoding phase: noisy clipped SGD on the variational loss with the PCA
// encoder mean and the mixture prior held fixed.

#ifndef PHASEGEN_DPSGD_H_
#define PHASEGEN_DPSGD_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phasegen/elbo.h"
#include "phasegen/mog.h"
#include "phasegen/pca.h"
#include "phasegen/privacy.h"
#include "phasegen/random.h"

namespace phasegen {

struct TrainConfig {
  std::int64_t batch_size = 300;
  // +inf disables clipping (only meaningful with noise_multiplier = 0).
  double clip_norm = 1.0;
  double noise_multiplier = 1.4;
  double learning_rate = 1e-3;
  std::int64_t epochs = 4;
  int mc_samples = 1;

  void validate() const;
  // epochs · ⌊n / batch_size⌋
  std::int64_t steps(std::int64_t n) const;
  double sampling_probability(std::int64_t n) const;
};

struct StepRecord {
  std::int64_t step = 0;
  std::int64_t batch = 0;  // realized batch size
  ElboTerms mean_terms;    // averaged over the realized batch
};

struct TrainLog {
  std::vector<StepRecord> records;
  std::int64_t steps = 0;
  RdpCurve consumed;
};

// Called once per step with the norms of the clipped per-example gradients
// that enter the noisy sum.
using ClipObserver = std::function<void(std::int64_t step, std::span<const double> norms)>;

// Privacy cost of training on n records: steps · per-step subsampled-SGD
// curve. Zero steps cost nothing; a zero noise multiplier costs +inf.
RdpCurve make_step_curve(const TrainConfig& config, std::int64_t n,
                         const std::vector<double>& orders = default_orders());

// Runs config.steps(n) steps. Each step includes every record independently
// with probability batch_size / n, sums the clipped per-example gradients,
// adds N(0, σ²C²) noise, divides by batch_size and takes a plain SGD step.
// Only nets change. targets are the decoder reconstruction targets,
// encoder_rows the unit-norm rows the PCA projects.
TrainLog train(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& encoder_rows,
               const PcaModel& pca, const MoG& prior, VaeNets& nets,
               const TrainConfig& config, const Rng& rng,
               const std::vector<double>& orders = default_orders(),
               const ClipObserver& observer = {});

// One CSV line per step: step,batch,recon,kl,total.
void write_train_log(const TrainLog& log, std::ostream& out);

}  // namespace phasegen

#endif  // PHASEGEN_DPSGD_H_
