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

#include "phasegen/cli.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "phasegen/csv_io.h"
#include "phasegen/errors.h"
#include "phasegen/eval.h"
#include "phasegen/model_io.h"

namespace phasegen {
namespace {

using nlohmann::json;

// Flags shared by fit, account and bench. Only flags actually given
// override the config file or preset.
struct Knobs {
  std::string config_path;
  double eps = 1.0;
  double delta = 1e-5;
  double encoder_fraction = 0.3;
  double pca_fraction = 0.1;
  std::uint64_t seed = 0;
  Eigen::Index dim_reduce = 10;
  bool no_pca = false;
  std::int64_t components = 3;
  std::int64_t em_iters = 20;
  std::int64_t epochs = 4;
  std::int64_t batch = 300;
  double clip = 1.0;
  double lr = 1e-3;
  int mc_samples = 1;
  std::vector<Eigen::Index> hidden;
  std::string head = "bernoulli";
  bool fixed_variance = false;
  double pca_sigma = 0.0;
  double em_sigma = 0.0;
  double sgd_sigma = 0.0;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    auto add = [&](CLI::Option* o) { opts.push_back(o); };
    add(app->add_option("--config", config_path, "JSON file with privacy and model sections")
            ->check(CLI::ExistingFile));
    add(app->add_option("--eps", eps, "target epsilon (inf allowed)"));
    add(app->add_option("--delta", delta, "target delta"));
    add(app->add_option("--encoder-fraction", encoder_fraction,
                        "share of epsilon for PCA + EM"));
    add(app->add_option("--pca-fraction", pca_fraction, "share of epsilon for PCA"));
    add(app->add_option("--seed", seed, "master seed"));
    add(app->add_option("--dim-reduce", dim_reduce, "latent dimension"));
    add(app->add_flag("--no-pca", no_pca, "use the encoded row itself as latent mean"));
    add(app->add_option("--components", components, "mixture components"));
    add(app->add_option("--em-iters", em_iters, "EM iterations"));
    add(app->add_option("--epochs", epochs, "training epochs"));
    add(app->add_option("--batch", batch, "expected batch size"));
    add(app->add_option("--clip", clip, "per-example gradient clip norm"));
    add(app->add_option("--lr", lr, "learning rate"));
    add(app->add_option("--mc-samples", mc_samples, "reparameterized draws per example"));
    add(app->add_option("--hidden", hidden, "hidden layer widths"));
    add(app->add_option("--head", head, "decoder head: bernoulli or gaussian"));
    add(app->add_flag("--fixed-variance", fixed_variance, "autoencoder variant"));
    add(app->add_option("--pca-sigma", pca_sigma, "fix PCA noise instead of calibrating"));
    add(app->add_option("--em-sigma", em_sigma, "fix EM noise instead of calibrating"));
    add(app->add_option("--sgd-sigma", sgd_sigma, "fix SGD noise multiplier"));
  }

  bool given(const std::string& name) const {
    for (CLI::Option* o : opts) {
      if (o->check_lname(name.substr(2)) && o->count() > 0) return true;
    }
    return false;
  }

  void apply(PrivacySpec& p, ModelConfig& c) const {
    if (!config_path.empty()) {
      const json j = load_json(config_path);
      if (j.contains("privacy")) p = privacy_from_json(j.at("privacy"));
      if (j.contains("model")) c = ModelConfig::from_json(j.at("model"));
    }
    if (given("--eps")) p.epsilon_target = eps;
    if (given("--delta")) p.delta = delta;
    if (given("--encoder-fraction")) p.encoder_fraction = encoder_fraction;
    if (given("--pca-fraction")) p.pca_fraction = pca_fraction;
    if (given("--seed")) c.seed = seed;
    if (given("--dim-reduce")) c.reduced_dim = dim_reduce;
    if (no_pca) c.use_pca = false;
    if (given("--components")) c.components = components;
    if (given("--em-iters")) c.em_iterations = em_iters;
    if (given("--epochs")) c.train.epochs = epochs;
    if (given("--batch")) c.train.batch_size = batch;
    if (given("--clip")) c.train.clip_norm = clip;
    if (given("--lr")) c.train.learning_rate = lr;
    if (given("--mc-samples")) c.train.mc_samples = mc_samples;
    if (given("--hidden")) c.hidden = hidden;
    if (given("--head")) c.head = decoder_head_from_string(head);
    if (fixed_variance) c.fixed_variance = true;
    if (given("--pca-sigma")) c.pca_sigma = pca_sigma;
    if (given("--em-sigma")) c.em_sigma = em_sigma;
    if (given("--sgd-sigma")) c.sgd_sigma = sgd_sigma;
    p.validate();
  }
};

std::map<std::string, double> parse_ratio(const std::string& text) {
  std::map<std::string, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DomainError("label ratio: expected class=fraction, got '" + item + "'");
    try {
      out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw DomainError("label ratio: bad fraction in '" + item + "'");
    }
  }
  return out;
}

json noise_json(const NoiseScales& n) {
  return {{"pca", n.pca}, {"em", n.em}, {"sgd", n.sgd}};
}

json budget_summary(const BudgetReport& b, const PrivacySpec& p) {
  json parts = json::array();
  for (const MechanismBudget& m : b.parts) {
    parts.push_back({{"mechanism", mechanism_to_json(m.spec)},
                     {"rdp_at_optimal_order", m.rdp_at_optimal_order},
                     {"standalone_epsilon", m.standalone.epsilon}});
  }
  return {{"epsilon", b.epsilon},
          {"delta", b.delta},
          {"optimal_order", b.optimal_order},
          {"target_epsilon", std::isinf(p.epsilon_target) ? json("inf") : json(p.epsilon_target)},
          {"within_target", b.epsilon <= p.epsilon_target},
          {"parts", parts}};
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

int cmd_fit(const Knobs& k, const std::string& data, const std::string& schema_path,
            const std::string& out_path, std::ostream& out) {
  PrivacySpec privacy;
  ModelConfig config;
  k.apply(privacy, config);
  const ColumnSchema schema = load_schema(schema_path);
  const IngestResult ingest = load_csv(data, schema);
  const FitResult r = fit(ingest.table, privacy, config);
  save_model(r.model, out_path);

  json report = budget_to_json(r.model.budget);
  report["noise"] = noise_json(r.model.noise);
  report["privacy"] = privacy_to_json(privacy);
  report["ingest"] = ingest.log.to_json();
  report["em_log_likelihood"] = r.em_trace.log_likelihood;
  write_text_file(out_path + ".budget.json", report.dump(2) + "\n");
  std::ostringstream log;
  write_train_log(r.train_log, log);
  write_text_file(out_path + ".trainlog.csv", log.str());

  json summary = budget_summary(r.model.budget, privacy);
  summary["model"] = out_path;
  summary["noise"] = noise_json(r.model.noise);
  summary["rows"] = ingest.log.rows;
  summary["clipped_rows"] = ingest.log.clipped_rows;
  summary["steps"] = r.train_log.steps;
  emit(out, summary);
  return 0;
}

int cmd_synth(const std::string& model_path, std::int64_t n, std::uint64_t seed,
              const std::string& ratio, bool sample_output, const std::string& out_path,
              std::ostream& out) {
  const GenerativeModel model = load_model(model_path);
  SynthesisOptions opts;
  opts.sample_output = sample_output;
  if (!ratio.empty()) opts.label_ratio = parse_ratio(ratio);
  Rng rng = Rng(seed).substream("synth");
  const DatasetTable table = synthesize(model, n, opts, rng);
  if (out_path.empty()) {
    write_csv(table, out);
  } else {
    save_csv(table, out_path);
  }
  return 0;
}

int cmd_eval(const std::string& schema_path, const std::string& real, const std::string& synth,
             const std::string& test, int bins, bool union_range, const std::string& out_path,
             std::ostream& out) {
  const ColumnSchema schema = load_schema(schema_path);
  const DatasetTable real_t = load_csv(real, schema).table;
  const DatasetTable synth_t = load_csv(synth, schema).table;
  const MarginalReport marg = two_way_tvd(real_t, synth_t, bins, union_range);
  json report{{"marginals", marginal_to_json(marg, schema)}};
  if (!test.empty()) {
    const DatasetTable test_t = load_csv(test, schema).table;
    report["synthetic_to_real"] = metrics_to_json(synthetic_utility(synth_t, test_t));
    report["real_to_real"] = metrics_to_json(synthetic_utility(real_t, test_t));
  }
  if (out_path.empty()) {
    emit(out, report);
    return 0;
  }
  write_text_file(out_path, report.dump(2) + "\n");
  std::ostringstream pairs;
  pairs << "a,b,tvd\n";
  pairs.precision(17);
  for (const PairTvd& p : marg.pairs) {
    pairs << schema.columns()[p.first].name << ',' << schema.columns()[p.second].name << ','
          << p.tvd << '\n';
  }
  write_text_file(out_path + ".pairs.csv", pairs.str());
  emit(out, {{"report", out_path}, {"average_tvd", marg.average}});
  return 0;
}

int cmd_account(const Knobs& k, const std::string& dataset, std::int64_t rows,
                const std::string& out_path, std::ostream& out) {
  PrivacySpec privacy;
  ModelConfig config;
  if (!dataset.empty()) {
    const auto preset = find_preset(dataset);
    if (!preset) throw DomainError("account: unknown dataset preset '" + dataset + "'");
    config.train.noise_multiplier = preset->noise_multiplier;
    config.train.learning_rate = preset->learning_rate;
    config.train.epochs = preset->epochs;
    config.train.batch_size = preset->batch_size;
    config.use_pca = preset->use_pca;
    rows = rows > 0 ? rows : preset->rows;
  }
  k.apply(privacy, config);
  // An explicit mechanism list is accounted as declared, without calibration.
  if (!k.config_path.empty()) {
    const json cfg = load_json(k.config_path);
    if (cfg.contains("mechanisms")) {
      std::vector<MechanismSpec> specs;
      for (const json& m : cfg.at("mechanisms")) specs.push_back(mechanism_from_json(m));
      if (specs.empty()) throw DomainError("account: empty mechanism list");
      json j = budget_summary(total_privacy(specs, privacy.delta, privacy.orders), privacy);
      if (!out_path.empty()) write_text_file(out_path, j.dump(2) + "\n");
      emit(out, j);
      return 0;
    }
  }
  if (rows <= 0) throw DomainError("account: give --rows or --dataset");
  const Calibration cal = calibrate(privacy, pipeline_structure(config, rows));
  json j = budget_summary(cal.report, privacy);
  j["rows"] = rows;
  j["noise"] = {{"pca", cal.pca_sigma}, {"em", cal.em_sigma}, {"sgd", cal.sgd_sigma}};
  j["steps"] = config.train.steps(rows);
  j["sampling_probability"] = config.train.sampling_probability(rows);
  if (!out_path.empty()) write_text_file(out_path, j.dump(2) + "\n");
  emit(out, j);
  return 0;
}

int cmd_bench(const Knobs& k, Eigen::Index d, Eigen::Index rows, Eigen::Index test_rows,
              int seeds, double encoder_scale, const std::string& out_path, std::ostream& out) {
  PrivacySpec privacy;
  ModelConfig config = benchmark_model_config();
  k.apply(privacy, config);
  BenchmarkOptions opts;
  opts.dim = d;
  opts.rows = rows;
  opts.test_rows = test_rows;
  opts.encoder_scale = encoder_scale;
  json runs = json::array();
  double auroc = 0.0, tvd = 0.0;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
    const BenchmarkResult r = run_two_gaussian_benchmark(opts, privacy, config, seed);
    json m = metrics_to_json(r.metrics);
    runs.push_back({{"seed", seed}, {"epsilon", r.epsilon}, {"metrics", m},
                    {"average_tvd", r.average_tvd}});
    auroc += r.metrics.auroc;
    tvd += r.average_tvd;
  }
  const json report{{"dim", d},
                    {"rows", rows},
                    {"privacy", privacy_to_json(privacy)},
                    {"config", config.to_json()},
                    {"runs", runs},
                    {"mean_auroc", auroc / seeds},
                    {"mean_tvd", tvd / seeds}};
  if (!out_path.empty()) write_text_file(out_path, report.dump(2) + "\n");
  emit(out, report);
  return 0;
}

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

const std::vector<DatasetPreset>& dataset_presets() {
  static const std::vector<DatasetPreset> presets = {
      {"kaggle", 256326, 2.1, 1e-3, 15, 100, false},
      {"adult", 40699, 1.4, 1e-3, 5, 200, true},
      {"isolet", 7017, 1.6, 1e-3, 2, 100, true},
      {"esr", 10350, 1.4, 1e-3, 2, 100, true},
      {"mnist", 63000, 1.4, 1e-3, 4, 300, true},
      {"fashion", 63000, 1.4, 1e-3, 4, 300, true},
  };
  return presets;
}

std::optional<DatasetPreset> find_preset(const std::string& name) {
  for (const DatasetPreset& p : dataset_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private generative model for tabular data", "phasegen"};
  app.require_subcommand(1);

  Knobs fit_k, account_k, bench_k;
  std::string data, schema, out_path;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model on a CSV table");
  fit_k.attach(fit_cmd);
  fit_cmd->add_option("--data", data, "training CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--schema", schema, "schema JSON")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", out_path, "model file")->required();

  std::string model_path, ratio, synth_out;
  std::int64_t n = 0;
  std::uint64_t synth_seed = 0;
  bool sample_output = false;
  CLI::App* synth_cmd = app.add_subcommand("synth", "sample rows from a saved model");
  synth_cmd->add_option("--model", model_path, "model file")->required();
  synth_cmd->add_option("-n,--rows", n, "rows to emit")->required();
  synth_cmd->add_option("--seed", synth_seed, "synthesis seed");
  synth_cmd->add_option("--label-ratio", ratio, "class=fraction,... quotas");
  synth_cmd->add_flag("--sample-output", sample_output, "draw from the decoder distribution");
  synth_cmd->add_option("--out", synth_out, "output CSV (stdout if absent)");

  std::string real, synth, test, eval_out;
  int bins = 10;
  bool union_range = false;
  std::string eval_schema;
  CLI::App* eval_cmd = app.add_subcommand("eval", "compare a synthetic table to real data");
  eval_cmd->add_option("--schema", eval_schema, "schema JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--real", real, "real CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--synth", synth, "synthetic CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", test, "held-out real CSV for classifier metrics")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--bins", bins, "bins per continuous column");
  eval_cmd->add_flag("--union-range", union_range, "bin over the union of both ranges");
  eval_cmd->add_option("--out", eval_out, "report JSON");

  std::string dataset;
  std::int64_t account_rows = 0;
  CLI::App* account_cmd = app.add_subcommand("account", "privacy budget dry run");
  account_k.attach(account_cmd);
  account_cmd->add_option("--dataset", dataset, "preset: kaggle adult isolet esr mnist fashion");
  account_cmd->add_option("--rows", account_rows, "training rows");
  std::string account_out;
  account_cmd->add_option("--out", account_out, "report JSON");

  Eigen::Index bench_d = 20, bench_rows = 20000, bench_test = 5000;
  int bench_seeds = 1;
  double encoder_scale = 1.0;
  std::string bench_out;
  CLI::App* bench_cmd = app.add_subcommand("bench", "two-Gaussian end-to-end benchmark");
  bench_k.attach(bench_cmd);
  bench_cmd->add_option("--d", bench_d, "feature dimension");
  bench_cmd->add_option("--rows", bench_rows, "training rows");
  bench_cmd->add_option("--test-rows", bench_test, "held-out rows");
  bench_cmd->add_option("--seeds", bench_seeds, "consecutive seeds from --seed")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--encoder-scale", encoder_scale, "encoder-domain scale");
  bench_cmd->add_option("--out", bench_out, "report JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_k, data, schema, out_path, out);
    if (*synth_cmd) {
      return cmd_synth(model_path, n, synth_seed, ratio, sample_output, synth_out, out);
    }
    if (*eval_cmd) {
      return cmd_eval(eval_schema, real, synth, test, bins, union_range, eval_out, out);
    }
    if (*account_cmd) return cmd_account(account_k, dataset, account_rows, account_out, out);
    if (*bench_cmd) {
      return cmd_bench(bench_k, bench_d, bench_rows, bench_test, bench_seeds, encoder_scale,
                       bench_out, out);
    }
  } catch (const InfeasibleBudgetError& e) {
    return report_error(err, "infeasible_budget", e.what(), kExitInfeasible);
  } catch (const FormatError& e) {
    return report_error(err, "format", e.what(), kExitFormat);
  } catch (const NumericalError& e) {
    return report_error(err, "numerical", e.what(), kExitNumerical);
  } catch (const std::invalid_argument& e) {
    return report_error(err, "domain", e.what(), kExitDomain);
  } catch (const std::exception& e) {
    return report_error(err, "internal", e.what(), kExitInternal);
  }
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace phasegen
