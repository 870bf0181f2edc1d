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

#include "phasegen/pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"

namespace phasegen {
namespace {

using nlohmann::json;

// JSON has no infinity; curves can contain it.
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

json curve_to_json(const RdpCurve& c) {
  json values = json::array();
  for (double v : c.values()) values.push_back(number(v));
  return {{"orders", c.orders()}, {"values", values}};
}

RdpCurve curve_from_json(const json& j) {
  std::vector<double> values;
  for (const auto& v : j.at("values")) values.push_back(number_from(v));
  return RdpCurve(j.at("orders").get<std::vector<double>>(), std::move(values));
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

json mechanism_to_json(const MechanismSpec& spec) {
  struct Visitor {
    json operator()(const GaussianRelease& g) const {
      return {{"kind", "gaussian_release"}, {"sigma", g.sigma}, {"releases", g.releases}};
    }
    json operator()(const SubsampledSgd& s) const {
      return {{"kind", "subsampled_sgd"},
              {"noise_multiplier", s.noise_multiplier},
              {"sampling_probability", s.sampling_probability},
              {"steps", s.steps}};
    }
    json operator()(const DpEm& e) const {
      return {{"kind", "dp_em"},
              {"sigma", e.sigma},
              {"components", e.components},
              {"iterations", e.iterations}};
    }
  };
  return std::visit(Visitor{}, spec);
}

MechanismSpec mechanism_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    MechanismSpec spec;
    if (kind == "gaussian_release") {
      spec = GaussianRelease{j.at("sigma").get<double>(), j.value("releases", std::int64_t{1})};
    } else if (kind == "subsampled_sgd") {
      spec = SubsampledSgd{j.at("noise_multiplier").get<double>(),
                           j.at("sampling_probability").get<double>(),
                           j.at("steps").get<std::int64_t>()};
    } else if (kind == "dp_em") {
      spec = DpEm{j.at("sigma").get<double>(), j.at("components").get<std::int64_t>(),
                  j.at("iterations").get<std::int64_t>()};
    } else {
      throw FormatError("unknown mechanism kind '" + kind + "'");
    }
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("mechanism: ") + e.what());
  }
}

json budget_to_json(const BudgetReport& report) {
  json parts = json::array();
  for (const MechanismBudget& p : report.parts) {
    parts.push_back({{"mechanism", mechanism_to_json(p.spec)},
                     {"curve", curve_to_json(p.curve)},
                     {"rdp_at_optimal_order", number(p.rdp_at_optimal_order)},
                     {"standalone_epsilon", number(p.standalone.epsilon)},
                     {"standalone_order", p.standalone.order}});
  }
  return {{"parts", parts},
          {"total", curve_to_json(report.total)},
          {"delta", report.delta},
          {"epsilon", number(report.epsilon)},
          {"optimal_order", report.optimal_order}};
}

BudgetReport budget_from_json(const json& j) {
  try {
    BudgetReport report;
    for (const auto& p : j.at("parts")) {
      report.parts.push_back(MechanismBudget{
          .spec = mechanism_from_json(p.at("mechanism")),
          .curve = curve_from_json(p.at("curve")),
          .rdp_at_optimal_order = number_from(p.at("rdp_at_optimal_order")),
          .standalone = {number_from(p.at("standalone_epsilon")),
                         p.at("standalone_order").get<double>()},
      });
    }
    report.total = curve_from_json(j.at("total"));
    report.delta = j.at("delta").get<double>();
    report.epsilon = number_from(j.at("epsilon"));
    report.optimal_order = j.at("optimal_order").get<double>();
    return report;
  } catch (const json::exception& e) {
    throw FormatError(std::string("budget report: ") + e.what());
  }
}

json privacy_to_json(const PrivacySpec& spec) {
  return {{"epsilon", number(spec.epsilon_target)},
          {"delta", spec.delta},
          {"encoder_fraction", spec.encoder_fraction},
          {"pca_fraction", spec.pca_fraction},
          {"orders", spec.orders}};
}

PrivacySpec privacy_from_json(const json& j) {
  try {
    PrivacySpec spec;
    if (j.contains("epsilon")) spec.epsilon_target = number_from(j.at("epsilon"));
    spec.delta = j.value("delta", spec.delta);
    spec.encoder_fraction = j.value("encoder_fraction", spec.encoder_fraction);
    spec.pca_fraction = j.value("pca_fraction", spec.pca_fraction);
    if (j.contains("orders")) spec.orders = j.at("orders").get<std::vector<double>>();
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw FormatError(std::string("privacy: ") + e.what());
  }
}

json ModelConfig::to_json() const {
  return {{"reduced_dim", reduced_dim},
          {"use_pca", use_pca},
          {"components", components},
          {"em_iterations", em_iterations},
          {"train",
           {{"batch_size", train.batch_size},
            {"clip_norm", number(train.clip_norm)},
            {"noise_multiplier", train.noise_multiplier},
            {"learning_rate", train.learning_rate},
            {"epochs", train.epochs},
            {"mc_samples", train.mc_samples}}},
          {"hidden", hidden},
          {"head", to_string(head)},
          {"fixed_variance", fixed_variance},
          {"pca_sigma", optional_json(pca_sigma)},
          {"em_sigma", optional_json(em_sigma)},
          {"sgd_sigma", optional_json(sgd_sigma)},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  try {
    ModelConfig c;
    c.reduced_dim = j.value("reduced_dim", c.reduced_dim);
    c.use_pca = j.value("use_pca", c.use_pca);
    c.components = j.value("components", c.components);
    c.em_iterations = j.value("em_iterations", c.em_iterations);
    if (j.contains("train")) {
      const json& t = j.at("train");
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      if (t.contains("clip_norm")) c.train.clip_norm = number_from(t.at("clip_norm"));
      c.train.noise_multiplier = t.value("noise_multiplier", c.train.noise_multiplier);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.mc_samples = t.value("mc_samples", c.train.mc_samples);
    }
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
    if (j.contains("head")) c.head = decoder_head_from_string(j.at("head").get<std::string>());
    c.fixed_variance = j.value("fixed_variance", c.fixed_variance);
    c.pca_sigma = optional_from<double>(j, "pca_sigma");
    c.em_sigma = optional_from<double>(j, "em_sigma");
    c.sgd_sigma = optional_from<double>(j, "sgd_sigma");
    c.seed = j.value("seed", c.seed);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

PipelineStructure pipeline_structure(const ModelConfig& config, std::int64_t rows) {
  config.train.validate();
  if (config.train.batch_size >= rows) {
    throw DomainError("fit: batch size must be smaller than the row count");
  }
  PipelineStructure s;
  s.use_pca = config.use_pca;
  s.pca_releases = PcaModel::kReleases;
  s.components = config.components;
  s.em_iterations = config.em_iterations;
  s.sampling_probability = config.train.sampling_probability(rows);
  s.sgd_steps = config.train.steps(rows);
  s.pca_sigma = config.pca_sigma;
  s.em_sigma = config.em_sigma;
  s.sgd_sigma = config.sgd_sigma;
  return s;
}

FitResult fit(const DatasetTable& data, const PrivacySpec& privacy,
              const ModelConfig& config) {
  privacy.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index width = data.schema.width();
  if (data.values.cols() != width) throw DomainError("fit: table width does not match schema");
  if (config.components < 1) throw DomainError("fit: components must be >= 1");
  if (n < 10 * config.components) {
    throw DomainError("fit: degenerate data, need at least 10 rows per mixture component");
  }
  const Eigen::Index latent_dim = config.use_pca ? config.reduced_dim : width;
  if (latent_dim < 1 || latent_dim > width) {
    throw DomainError("fit: reduced dimension must lie in [1, encoded width]");
  }

  const PipelineStructure structure = pipeline_structure(config, n);
  const Calibration cal = calibrate(privacy, structure);
  if (!(cal.report.epsilon <= privacy.epsilon_target)) {
    throw InfeasibleBudgetError("fit: fixed noise scales certify epsilon " +
                                std::to_string(cal.report.epsilon) + " > target " +
                                std::to_string(privacy.epsilon_target));
  }

  const Rng master(config.seed);
  Rng pca_rng = master.substream("pca");
  Rng em_rng = master.substream("em");
  Rng init_rng = master.substream("init");
  const Rng sgd_rng = master.substream("sgd");

  FitResult result;
  const EncoderView view = encoder_view(data.schema, data.values);
  result.clipped_rows = view.clipped;

  GenerativeModel& model = result.model;
  model.schema = data.schema;
  model.privacy = privacy;
  model.config = config;
  model.noise = {cal.pca_sigma, cal.em_sigma, cal.sgd_sigma};
  model.training_rows = n;

  if (config.use_pca) {
    model.pca = PcaModel::fit(view.rows, latent_dim, cal.pca_sigma, pca_rng);
  } else {
    model.pca = PcaModel(Eigen::VectorXd::Zero(width), Eigen::MatrixXd::Identity(width, width),
                         Eigen::VectorXd::Zero(width));
  }

  Eigen::MatrixXd latents = model.pca.transform_rows(view.rows);
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    latents.row(i) *= clip_factor(latents.row(i).norm(), 1.0);
  }
  model.prior = dp_em_fit(
      latents, EmConfig{config.components, config.em_iterations, cal.em_sigma}, em_rng,
      nullptr, &result.em_trace);

  model.nets = VaeNets::create(width, latent_dim, config.hidden, config.head,
                               config.fixed_variance, init_rng);
  TrainConfig train = config.train;
  train.noise_multiplier = cal.sgd_sigma;
  result.train_log = phasegen::train(data.values, view.rows, model.pca, model.prior,
                                     model.nets, train, sgd_rng, privacy.orders);
  model.budget = cal.report;
  return result;
}

std::vector<std::int64_t> label_quotas(const ColumnSchema& schema,
                                       const std::map<std::string, double>& ratio,
                                       std::int64_t n) {
  const auto label = schema.label_column();
  if (!label) throw DomainError("synthesize: label ratio given but schema has no label");
  const auto& classes = schema.columns()[*label].categories;
  std::vector<double> fractions(classes.size(), 0.0);
  double total = 0.0;
  for (const auto& [name, f] : ratio) {
    if (!(f >= 0.0)) throw DomainError("synthesize: label fractions must be >= 0");
    fractions[schema.category_index(*label, name)] = f;
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("synthesize: label fractions must sum to 1");

  std::vector<std::int64_t> quotas(classes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double exact = fractions[c] * static_cast<double>(n);
    quotas[c] = static_cast<std::int64_t>(std::floor(exact));
    assigned += quotas[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
    ++quotas[remainders[i % remainders.size()].second];
  }
  return quotas;
}

DatasetTable synthesize(const GenerativeModel& model, std::int64_t n,
                        const SynthesisOptions& options, Rng& rng) {
  if (n < 1) throw DomainError("synthesize: n must be >= 1");
  const ColumnSchema& schema = model.schema;
  std::optional<std::vector<std::int64_t>> quotas;
  if (options.label_ratio) quotas = label_quotas(schema, *options.label_ratio, n);
  const auto label = schema.label_column();

  DatasetTable out{schema, Eigen::MatrixXd::Zero(n, schema.width())};
  const std::int64_t max_draws = options.max_draw_factor * n;
  std::int64_t filled = 0;
  Eigen::RowVectorXd row(schema.width());
  for (std::int64_t draws = 0; filled < n; ++draws) {
    if (draws >= max_draws) {
      throw DomainError("synthesize: label quota unreachable within " +
                        std::to_string(max_draws) + " draws");
    }
    const Eigen::VectorXd mean = model.nets.decode_mean(model.prior.sample(rng));
    row.setZero();
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const Eigen::Index off = schema.offset(c);
      if (!schema.columns()[c].one_hot()) {
        double v = mean[off];
        if (options.sample_output) {
          v = model.nets.head == DecoderHead::kBernoulli
                  ? (rng.bernoulli(std::clamp(v, 0.0, 1.0)) ? 1.0 : 0.0)
                  : v + rng.normal();
        }
        row[off] = std::clamp(v, 0.0, 1.0);
        continue;
      }
      const Eigen::Index a = schema.arity(c);
      Eigen::Index pick = 0;
      if (options.sample_output) {
        const Eigen::VectorXd w = mean.segment(off, a).cwiseMax(0.0);
        pick = w.sum() > 0.0 ? static_cast<Eigen::Index>(rng.categorical(
                                   std::span<const double>(w.data(), static_cast<std::size_t>(a))))
                             : 0;
      } else {
        mean.segment(off, a).maxCoeff(&pick);
      }
      row[off + pick] = 1.0;
    }
    if (quotas) {
      const std::size_t cls = group_argmax(schema, *label, row);
      if ((*quotas)[cls] == 0) continue;
      --(*quotas)[cls];
    }
    out.values.row(filled++) = row;
  }
  return out;
}

}  // namespace phasegen
