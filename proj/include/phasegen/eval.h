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

// Utility metrics for synthetic tables.

#ifndef PHASEGEN_EVAL_H_
#define PHASEGEN_EVAL_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "phasegen/pipeline.h"
#include "phasegen/random.h"
#include "phasegen/schema.h"

namespace phasegen {

struct PairTvd {
  std::size_t first = 0;
  std::size_t second = 0;
  double tvd = 0.0;
};

struct MarginalReport {
  std::vector<PairTvd> pairs;
  double average = 0.0;
  int bins = 10;
  bool union_range = false;
};

// Continuous columns get `bins` equal-width bins over the real table's range
// (or the union of both ranges); one-hot groups use their categories. A
// single-column schema has no pairs and reports an average of 0.
MarginalReport two_way_tvd(const DatasetTable& real, const DatasetTable& synth, int bins = 10,
                           bool union_range = false);

// Half the L1 distance between two frequency tables of equal size.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

struct LogRegOptions {
  double l2 = 1e-3;
  double tolerance = 1e-6;  // on the gradient norm
  int max_iterations = 5000;
};

// One-vs-rest logistic regression; a two-class problem keeps a single
// model for the second class.
struct LogisticModel {
  std::size_t classes = 0;
  Eigen::MatrixXd weights;  // models × features
  Eigen::VectorXd bias;     // models
  int iterations = 0;       // max over the fitted models

  // rows × classes matrix of one-vs-rest probabilities. For two classes,
  // column 0 is 1 − p(second class).
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& features) const;
};

// Throws DomainError when the labels hold fewer than two distinct classes.
LogisticModel logreg_fit(const Eigen::MatrixXd& features, const std::vector<std::size_t>& labels,
                         std::size_t classes, const LogRegOptions& options = {});

struct ClassifierMetrics {
  double auroc = 0.5;
  double auprc = 0.0;
  double accuracy = 0.0;
};

// Binary metrics uses the second class as positive; multiclass AUROC and
// AUPRC are macro averages of one-vs-rest scores.
ClassifierMetrics logreg_metrics(const LogisticModel& model, const Eigen::MatrixXd& features,
                                 const std::vector<std::size_t>& labels);

// Mann-Whitney statistic with average ranks on ties. Needs both classes.
double auroc(const std::vector<double>& scores, const std::vector<bool>& positive);
// Step-wise precision-recall integral (average precision); tied scores form
// one threshold.
double auprc(const std::vector<double>& scores, const std::vector<bool>& positive);

// d continuous columns on the public range [-5, 5] plus a label column with
// classes "0" and "1". floor(N/2) rows come from N(+1, I) with label 1, the
// rest from N(-1, I) with label 0, in shuffled order.
DatasetTable two_gaussian_benchmark(Eigen::Index d, Eigen::Index n, Rng& rng,
                                    double encoder_scale = 1.0);

// Train on synthetic, test on real. A synthetic table holding a single class
// yields the constant classifier (AUROC 0.5).
ClassifierMetrics synthetic_utility(const DatasetTable& synth, const DatasetTable& test);

struct BenchmarkResult {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  ClassifierMetrics metrics;
  double average_tvd = 0.0;
  double seconds = 0.0;
};

struct BenchmarkOptions {
  Eigen::Index dim = 20;
  Eigen::Index rows = 20000;
  Eigen::Index test_rows = 5000;
  double encoder_scale = 1.0;
  // Public class balance of the task; synthesis reproduces it.
  bool balanced_synthesis = true;
};

// Model settings used by the benchmark, sized so five seeds finish in a few
// minutes on one core.
ModelConfig benchmark_model_config();

// Two-Gaussian end to end: generate, fit, synthesize as many rows as the
// training set, evaluate against held-out real rows.
BenchmarkResult run_two_gaussian_benchmark(const BenchmarkOptions& options,
                                           const PrivacySpec& privacy, ModelConfig config,
                                           std::uint64_t seed);

struct SweepRow {
  double encoder_fraction = 0.0;
  double epsilon = 0.0;
  NoiseScales noise;
  ClassifierMetrics metrics;
  double average_tvd = 0.0;
};

// One model per encoder fraction at fixed total ε. The PCA share keeps its
// ratio to the encoder share from `privacy`.
std::vector<SweepRow> budget_sweep(const DatasetTable& data, const DatasetTable& test,
                                   const PrivacySpec& privacy, const ModelConfig& config,
                                   const std::vector<double>& encoder_fractions);

nlohmann::json metrics_to_json(const ClassifierMetrics& m);
nlohmann::json marginal_to_json(const MarginalReport& r, const ColumnSchema& schema);

}  // namespace phasegen

#endif  // PHASEGEN_EVAL_H_
