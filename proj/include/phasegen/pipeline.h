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

// Two-phase private fit and post-processing synthesis.
//
//   encoding: private PCA of the encoder-domain rows (frozen encoder mean),
//             then noisy EM of a mixture prior on the clipped latents;
//   decoding: noisy clipped SGD of the decoder and encoder variance net.
//
// Synthesis only touches GenerativeModel fields, so sampled rows carry the
// model's privacy guarantee and nothing more.

#ifndef PHASEGEN_PIPELINE_H_
#define PHASEGEN_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "phasegen/dpsgd.h"
#include "phasegen/elbo.h"
#include "phasegen/mog.h"
#include "phasegen/pca.h"
#include "phasegen/privacy.h"
#include "phasegen/random.h"
#include "phasegen/schema.h"

namespace phasegen {

struct ModelConfig {
  Eigen::Index reduced_dim = 10;
  // Without PCA the latent space is the encoder domain itself.
  bool use_pca = true;
  std::int64_t components = 3;
  std::int64_t em_iterations = 20;
  // noise_multiplier is replaced by the calibrated (or fixed) sgd sigma.
  TrainConfig train;
  std::vector<Eigen::Index> hidden = {1000};
  DecoderHead head = DecoderHead::kBernoulli;
  // Autoencoder variant: posterior variance pinned at its floor.
  bool fixed_variance = false;
  // Fixed noise scales; unset ones are calibrated from the privacy spec.
  std::optional<double> pca_sigma;
  std::optional<double> em_sigma;
  std::optional<double> sgd_sigma;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct NoiseScales {
  double pca = 0.0;
  double em = 0.0;
  double sgd = 0.0;
};

struct GenerativeModel {
  ColumnSchema schema;
  PcaModel pca;
  MoG prior;
  VaeNets nets;
  PrivacySpec privacy;
  ModelConfig config;
  NoiseScales noise;
  BudgetReport budget;
  std::int64_t training_rows = 0;
};

struct FitResult {
  GenerativeModel model;
  TrainLog train_log;
  EmTrace em_trace;
  std::int64_t clipped_rows = 0;
};

PipelineStructure pipeline_structure(const ModelConfig& config, std::int64_t rows);

// Throws InfeasibleBudgetError when the certified epsilon would exceed the
// target, DomainError on degenerate data (fewer than 10·K rows).
FitResult fit(const DatasetTable& data, const PrivacySpec& privacy,
              const ModelConfig& config);

struct SynthesisOptions {
  // Class name -> fraction of the output; fractions must sum to 1.
  std::optional<std::map<std::string, double>> label_ratio;
  // Draw each feature from the decoder distribution instead of emitting its
  // mean.
  bool sample_output = false;
  // Rejection sampling gives up after max_draw_factor · n draws.
  std::int64_t max_draw_factor = 100;
};

DatasetTable synthesize(const GenerativeModel& model, std::int64_t n,
                        const SynthesisOptions& options, Rng& rng);

// Per-class row counts for n rows under the given fractions (largest
// remainder rounding), indexed like the label column's categories.
std::vector<std::int64_t> label_quotas(const ColumnSchema& schema,
                                       const std::map<std::string, double>& ratio,
                                       std::int64_t n);

nlohmann::json mechanism_to_json(const MechanismSpec& spec);
MechanismSpec mechanism_from_json(const nlohmann::json& j);
nlohmann::json budget_to_json(const BudgetReport& report);
BudgetReport budget_from_json(const nlohmann::json& j);
nlohmann::json privacy_to_json(const PrivacySpec& spec);
PrivacySpec privacy_from_json(const nlohmann::json& j);

}  // namespace phasegen

#endif  // PHASEGEN_PIPELINE_H_
