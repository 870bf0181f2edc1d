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

#include "phasegen/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "phasegen/errors.h"

namespace phasegen {
namespace {

struct Discretizer {
  bool one_hot = false;
  Eigen::Index offset = 0;
  Eigen::Index cells = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t column = 0;

  Eigen::Index operator()(const ColumnSchema& schema, const Eigen::MatrixXd& values,
                          Eigen::Index row) const {
    if (one_hot) return static_cast<Eigen::Index>(group_argmax(schema, column, values.row(row)));
    if (!(hi > lo)) return 0;
    const double t = (values(row, offset) - lo) / (hi - lo);
    const auto b = static_cast<Eigen::Index>(std::floor(t * static_cast<double>(cells)));
    return std::clamp<Eigen::Index>(b, 0, cells - 1);
  }
};

std::vector<Eigen::Index> codes(const ColumnSchema& schema, const Eigen::MatrixXd& values,
                                const Discretizer& disc) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = disc(schema, values, i);
  }
  return out;
}

double sigmoid(double a) {
  return a >= 0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// Binary L2-regularized fit by full-batch gradient descent with step 1/L,
// L the smoothness constant of the mean log-loss plus the ridge term.
std::pair<Eigen::VectorXd, int> fit_binary(const Eigen::MatrixXd& xa, const Eigen::VectorXd& y,
                                           double step, const LogRegOptions& opt) {
  const Eigen::Index n = xa.rows();
  const Eigen::Index p = xa.cols();  // last column is the bias
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(p, opt.l2);
  reg[p - 1] = 0.0;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::VectorXd resid = xa * w;
    for (Eigen::Index i = 0; i < n; ++i) resid[i] = sigmoid(resid[i]) - y[i];
    const Eigen::VectorXd grad =
        xa.transpose() * resid / static_cast<double>(n) + reg.cwiseProduct(w);
    if (grad.norm() <= opt.tolerance) break;
    w -= step * grad;
  }
  return {w, it};
}

}  // namespace

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

MarginalReport two_way_tvd(const DatasetTable& real, const DatasetTable& synth, int bins,
                           bool union_range) {
  if (!(real.schema == synth.schema)) throw DomainError("two_way_tvd: schema mismatch");
  if (bins < 2) throw DomainError("two_way_tvd: bins must be >= 2");
  if (real.rows() == 0 || synth.rows() == 0) throw DomainError("two_way_tvd: empty table");
  const ColumnSchema& schema = real.schema;

  std::vector<Discretizer> discs;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    Discretizer d;
    d.column = c;
    d.offset = schema.offset(c);
    d.one_hot = schema.columns()[c].one_hot();
    if (d.one_hot) {
      d.cells = schema.arity(c);
    } else {
      d.cells = bins;
      d.lo = real.values.col(d.offset).minCoeff();
      d.hi = real.values.col(d.offset).maxCoeff();
      if (union_range) {
        d.lo = std::min(d.lo, synth.values.col(d.offset).minCoeff());
        d.hi = std::max(d.hi, synth.values.col(d.offset).maxCoeff());
      }
    }
    discs.push_back(d);
  }
  std::vector<std::vector<Eigen::Index>> rc, sc;
  for (const Discretizer& d : discs) {
    rc.push_back(codes(schema, real.values, d));
    sc.push_back(codes(schema, synth.values, d));
  }

  MarginalReport report;
  report.bins = bins;
  report.union_range = union_range;
  for (std::size_t a = 0; a < discs.size(); ++a) {
    for (std::size_t b = a + 1; b < discs.size(); ++b) {
      const Eigen::Index nb = discs[b].cells;
      const Eigen::Index cells = discs[a].cells * nb;
      Eigen::VectorXd p = Eigen::VectorXd::Zero(cells);
      Eigen::VectorXd q = Eigen::VectorXd::Zero(cells);
      for (std::size_t i = 0; i < rc[a].size(); ++i) p[rc[a][i] * nb + rc[b][i]] += 1.0;
      for (std::size_t i = 0; i < sc[a].size(); ++i) q[sc[a][i] * nb + sc[b][i]] += 1.0;
      p /= static_cast<double>(real.rows());
      q /= static_cast<double>(synth.rows());
      report.pairs.push_back({a, b, total_variation(p, q)});
    }
  }
  if (!report.pairs.empty()) {
    double sum = 0.0;
    for (const PairTvd& t : report.pairs) sum += t.tvd;
    report.average = sum / static_cast<double>(report.pairs.size());
  }
  return report;
}

Eigen::MatrixXd LogisticModel::predict_proba(const Eigen::MatrixXd& features) const {
  if (features.cols() != weights.cols()) throw DomainError("logreg: feature width mismatch");
  const Eigen::MatrixXd logits = (features * weights.transpose()).rowwise() + bias.transpose();
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(classes));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (classes == 2) {
      out(i, 1) = sigmoid(logits(i, 0));
      out(i, 0) = 1.0 - out(i, 1);
    } else {
      for (Eigen::Index k = 0; k < logits.cols(); ++k) out(i, k) = sigmoid(logits(i, k));
    }
  }
  return out;
}

LogisticModel logreg_fit(const Eigen::MatrixXd& features, const std::vector<std::size_t>& labels,
                         std::size_t classes, const LogRegOptions& options) {
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw DomainError("logreg: label count mismatch");
  if (classes < 2) throw DomainError("logreg: need at least two classes");
  if (!features.allFinite()) throw DomainError("logreg: non-finite features");
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t y : labels) {
    if (y >= classes) throw DomainError("logreg: label out of range");
    ++counts[y];
  }
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DomainError("logreg: training set holds a single class");
  }

  Eigen::MatrixXd xa(n, features.cols() + 1);
  xa.leftCols(features.cols()) = features;
  xa.col(features.cols()).setOnes();
  const Eigen::MatrixXd gram = xa.transpose() * xa / static_cast<double>(n);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  const double step = 1.0 / (0.25 * top + options.l2);

  LogisticModel model;
  model.classes = classes;
  const std::size_t models = classes == 2 ? 1 : classes;
  model.weights.resize(static_cast<Eigen::Index>(models), features.cols());
  model.bias.resize(static_cast<Eigen::Index>(models));
  for (std::size_t m = 0; m < models; ++m) {
    const std::size_t positive = classes == 2 ? 1 : m;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] == positive;
    auto [w, it] = fit_binary(xa, y, step, options);
    model.weights.row(static_cast<Eigen::Index>(m)) = w.head(features.cols()).transpose();
    model.bias[static_cast<Eigen::Index>(m)] = w[features.cols()];
    model.iterations = std::max(model.iterations, it);
  }
  return model;
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw DomainError("auroc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (positive[order[k]]) {
        rank_sum += avg_rank;
        pos += 1.0;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DomainError("auroc: needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double auprc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw DomainError("auprc: size mismatch");
  const std::size_t n = scores.size();
  const auto total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0.0) throw DomainError("auprc: no positives");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, area = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      (positive[order[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    area += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j;
  }
  return area;
}

ClassifierMetrics logreg_metrics(const LogisticModel& model, const Eigen::MatrixXd& features,
                                 const std::vector<std::size_t>& labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DomainError("logreg: label count mismatch");
  }
  const Eigen::MatrixXd proba = model.predict_proba(features);
  ClassifierMetrics m;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index arg = 0;
    proba.row(i).maxCoeff(&arg);
    correct += static_cast<std::size_t>(arg) == labels[static_cast<std::size_t>(i)];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());

  const std::size_t first = model.classes == 2 ? 1 : 0;
  double roc = 0.0, pr = 0.0;
  int used = 0;
  for (std::size_t k = first; k < model.classes; ++k) {
    std::vector<double> s(labels.size());
    std::vector<bool> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = proba(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      y[i] = labels[i] == k;
    }
    const auto pos = std::count(y.begin(), y.end(), true);
    if (pos == 0 || pos == static_cast<long>(y.size())) continue;
    roc += auroc(s, y);
    pr += auprc(s, y);
    ++used;
  }
  if (used == 0) throw DomainError("logreg: test labels hold a single class");
  m.auroc = roc / used;
  m.auprc = pr / used;
  return m;
}

DatasetTable two_gaussian_benchmark(Eigen::Index d, Eigen::Index n, Rng& rng,
                                    double encoder_scale) {
  if (d < 1) throw DomainError("two_gaussian_benchmark: d must be >= 1");
  if (n < 0) throw DomainError("two_gaussian_benchmark: n must be >= 0");
  std::vector<ColumnSpec> cols;
  for (Eigen::Index j = 0; j < d; ++j) {
    cols.push_back({"x" + std::to_string(j), ColumnKind::kContinuous, -5.0, 5.0, {}});
  }
  cols.push_back({"label", ColumnKind::kLabel, 0.0, 1.0, {"0", "1"}});
  DatasetTable t{ColumnSchema(std::move(cols), encoder_scale), Eigen::MatrixXd::Zero(n, d + 2)};

  std::vector<int> cls(static_cast<std::size_t>(n), 0);
  std::fill(cls.begin(), cls.begin() + n / 2, 1);
  for (std::size_t i = cls.size(); i > 1; --i) std::swap(cls[i - 1], cls[rng.uniform_index(i)]);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = cls[static_cast<std::size_t>(i)];
    const double centre = c == 1 ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      t.values(i, j) = t.schema.scale(static_cast<std::size_t>(j), centre + rng.normal());
    }
    t.values(i, d + c) = 1.0;
  }
  return t;
}

ClassifierMetrics synthetic_utility(const DatasetTable& synth, const DatasetTable& test) {
  if (!(synth.schema == test.schema)) throw DomainError("synthetic_utility: schema mismatch");
  const auto label = test.schema.label_column();
  if (!label) throw DomainError("synthetic_utility: schema has no label");
  const auto classes = static_cast<std::size_t>(test.schema.arity(*label));
  const std::vector<std::size_t> y = synth.labels();
  const std::vector<std::size_t> ty = test.labels();
  if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) {
    ClassifierMetrics m;
    m.auroc = 0.5;
    const std::size_t only = y.empty() ? 0 : y.front();
    const auto hits = std::count(ty.begin(), ty.end(), only);
    m.accuracy = static_cast<double>(hits) / static_cast<double>(ty.size());
    const auto pos = std::count(ty.begin(), ty.end(), std::size_t{1});
    m.auprc = static_cast<double>(pos) / static_cast<double>(ty.size());
    return m;
  }
  const LogisticModel model = logreg_fit(synth.features(), y, classes);
  return logreg_metrics(model, test.features(), ty);
}

ModelConfig benchmark_model_config() {
  ModelConfig c;
  // A 10-dim latent holds only half of this task's isotropic feature noise,
  // which caps marginal fidelity of mean emission; keep (almost) full rank.
  c.reduced_dim = 20;
  c.components = 2;
  c.em_iterations = 5;
  c.hidden = {128};
  c.fixed_variance = true;
  c.train.batch_size = 300;
  c.train.epochs = 20;
  c.train.learning_rate = 0.5;
  c.train.clip_norm = 1.0;
  return c;
}

BenchmarkResult run_two_gaussian_benchmark(const BenchmarkOptions& options,
                                           const PrivacySpec& privacy, ModelConfig config,
                                           std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const Rng master(seed);
  Rng data_rng = master.substream("data");
  Rng test_rng = master.substream("test");
  const DatasetTable train =
      two_gaussian_benchmark(options.dim, options.rows, data_rng, options.encoder_scale);
  const DatasetTable test =
      two_gaussian_benchmark(options.dim, options.test_rows, test_rng, options.encoder_scale);

  config.seed = seed;
  const FitResult fitted = fit(train, privacy, config);
  SynthesisOptions so;
  if (options.balanced_synthesis) so.label_ratio = std::map<std::string, double>{{"0", 0.5}, {"1", 0.5}};
  Rng synth_rng = master.substream("synth");
  const DatasetTable synth = synthesize(fitted.model, train.rows(), so, synth_rng);

  BenchmarkResult r;
  r.seed = seed;
  r.epsilon = fitted.model.budget.epsilon;
  r.metrics = synthetic_utility(synth, test);
  r.average_tvd = two_way_tvd(train, synth).average;
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<SweepRow> budget_sweep(const DatasetTable& data, const DatasetTable& test,
                                   const PrivacySpec& privacy, const ModelConfig& config,
                                   const std::vector<double>& encoder_fractions) {
  std::vector<SweepRow> rows;
  const double pca_share = privacy.pca_fraction / privacy.encoder_fraction;
  for (double f : encoder_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw DomainError("budget_sweep: fractions must lie in (0, 1)");
    PrivacySpec p = privacy;
    p.encoder_fraction = f;
    p.pca_fraction = f * pca_share;
    const FitResult fitted = fit(data, p, config);
    Rng synth_rng = Rng(config.seed).substream("synth");
    const DatasetTable synth = synthesize(fitted.model, data.rows(), {}, synth_rng);
    SweepRow row;
    row.encoder_fraction = f;
    row.epsilon = fitted.model.budget.epsilon;
    row.noise = fitted.model.noise;
    row.metrics = synthetic_utility(synth, test);
    row.average_tvd = two_way_tvd(data, synth).average;
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json metrics_to_json(const ClassifierMetrics& m) {
  return {{"auroc", m.auroc}, {"auprc", m.auprc}, {"accuracy", m.accuracy}};
}

nlohmann::json marginal_to_json(const MarginalReport& r, const ColumnSchema& schema) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const PairTvd& p : r.pairs) {
    pairs.push_back({{"a", schema.columns()[p.first].name},
                     {"b", schema.columns()[p.second].name},
                     {"tvd", p.tvd}});
  }
  return {{"average_tvd", r.average},
          {"bins", r.bins},
          {"range", r.union_range ? "union" : "real"},
          {"pairs", pairs}};
}

}  // namespace phasegen
