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


#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "phasegen/cli.h"
#include "phasegen/csv_io.h"
#include "phasegen/errors.h"
#include "phasegen/eval.h"
#include "phasegen/model_io.h"

namespace phasegen {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ColumnSchema golden_schema(double encoder_scale = 0.5) {
  ColumnSpec x{.name = "x", .kind = ColumnKind::kContinuous, .min = 0.0, .max = 10.0, .categories = {}};
  ColumnSpec color{.name = "color", .kind = ColumnKind::kCategorical, .min = 0, .max = 1,
                   .categories = {"red", "green", "blue"}};
  ColumnSpec y{.name = "y", .kind = ColumnKind::kLabel, .min = 0, .max = 1, .categories = {"no", "yes"}};
  return ColumnSchema({x, color, y}, encoder_scale);
}

IngestResult read(const std::string& text, const ColumnSchema& s) {
  std::istringstream in(text);
  return read_csv(in, s);
}

std::string error_of(const std::string& text, const ColumnSchema& s) {
  try {
    read(text, s);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(Csv, GoldenTwoRows) {
  const IngestResult r = read("x,color,y\n5,green,yes\n10,red,no\n", golden_schema());
  Eigen::MatrixXd want(2, 6);
  want << 0.5, 0, 1, 0, 0, 1,
          1.0, 1, 0, 0, 1, 0;
  EXPECT_EQ(r.table.values, want);
  EXPECT_EQ(r.log.rows, 2);
  EXPECT_EQ(r.log.clipped_rows, 0);
  EXPECT_EQ(r.log.clamped_cells, 0);
}

TEST(Csv, ColumnOrderAndExtrasIgnored) {
  const IngestResult a = read("x,color,y\n5,green,yes\n", golden_schema());
  const IngestResult b = read("y,note,x,color\nyes,\"hi, there\",5,green\n", golden_schema());
  EXPECT_EQ(a.table.values, b.table.values);
}

TEST(Csv, OversizedRowsAreClippedAndLogged) {
  // At unit scale the one-hot offsets alone exceed norm 1.
  const IngestResult r = read("x,color,y\n5,green,yes\n5,red,no\n", golden_schema(1.0));
  EXPECT_EQ(r.log.clipped_rows, 2);
  EXPECT_EQ(r.log.clipped_row_indices, (std::vector<std::int64_t>{1, 2}));
  const EncoderView v = encoder_view(r.table.schema, r.table.values);
  EXPECT_NEAR(v.rows.row(0).norm(), 1.0, 1e-12);
  EXPECT_EQ(r.log.to_json()["clipped_rows"], 2);
  const IngestResult s = read("x,color,y\n5,green,yes\n", golden_schema(0.5));
  EXPECT_EQ(s.log.clipped_rows, 0);
}

TEST(Csv, OutOfRangeIsClamped) {
  const IngestResult r = read("x,color,y\n12,blue,no\n-1,blue,no\n", golden_schema());
  EXPECT_EQ(r.table.values(0, 0), 1.0);
  EXPECT_EQ(r.table.values(1, 0), 0.0);
  EXPECT_EQ(r.log.clamped_cells, 2);
}

TEST(Csv, UnknownCategoryNamesValue) {
  const std::string msg = error_of("x,color,y\n5,purple,yes\n", golden_schema());
  EXPECT_NE(msg.find("purple"), std::string::npos) << msg;
}

TEST(Csv, MissingColumnNamed) {
  const std::string msg = error_of("x,y\n5,yes\n", golden_schema());
  EXPECT_NE(msg.find("color"), std::string::npos) << msg;
}

TEST(Csv, UnparsableCellNamesRowAndColumn) {
  const std::string msg = error_of("x,color,y\n5,green,yes\nfive,red,no\n", golden_schema());
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("five"), std::string::npos) << msg;
}

TEST(Csv, EmptyInputs) {
  EXPECT_NE(error_of("", golden_schema()), "");
  EXPECT_NE(error_of("x,color,y\n", golden_schema()), "");
  EXPECT_NE(error_of("x,color,y\n5,green\n", golden_schema()), "");
}

TEST(Csv, SplitHandlesQuotes) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",\"d\"\"e\","),
            (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
}

TEST(Csv, WriteThenReadRoundTrips) {
  Rng rng(1);
  const DatasetTable t = two_gaussian_benchmark(3, 200, rng);
  std::stringstream buf;
  write_csv(t, buf);
  const IngestResult back = read_csv(buf, t.schema);
  EXPECT_LE((back.table.values - t.values).cwiseAbs().maxCoeff(), 1e-15);
  std::stringstream again;
  write_csv(back.table, again);
  std::stringstream first;
  write_csv(t, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Schema, JsonRoundTripAndErrors) {
  const ColumnSchema s = golden_schema();
  EXPECT_TRUE(ColumnSchema::from_json(s.to_json()) == s);
  json bad = s.to_json();
  bad["columns"][0]["kind"] = "ordinal";
  EXPECT_THROW(ColumnSchema::from_json(bad), FormatError);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("phasegen_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  // Small benchmark table on disk with its schema.
  void write_data(Eigen::Index rows = 1500) {
    Rng rng(3);
    const DatasetTable t = two_gaussian_benchmark(3, rows, rng);
    save_csv(t, path("data.csv"));
    write_text_file(path("schema.json"), t.schema.to_json().dump());
    schema_ = t.schema;
  }

  std::vector<std::string> small_knobs() const {
    return {"--dim-reduce", "2", "--components", "2", "--em-iters", "3", "--epochs", "1",
            "--batch", "100", "--hidden", "8", "--lr", "0.05", "--seed", "4"};
  }

  int fit_model(const std::string& eps = "5") {
    std::vector<std::string> a = {"fit", "--data", path("data.csv"), "--schema",
                                  path("schema.json"), "--out", path("model.bin"), "--eps", eps};
    const auto k = small_knobs();
    a.insert(a.end(), k.begin(), k.end());
    return run(a);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
  ColumnSchema schema_;
};

TEST_F(Cli, FitWritesModelBudgetAndLog) {
  write_data();
  ASSERT_EQ(fit_model(), 0) << err_.str();
  EXPECT_TRUE(fs::exists(path("model.bin")));
  const json budget = load_json(path("model.bin.budget.json"));
  EXPECT_LE(budget["epsilon"].get<double>(), 5.0);
  std::ifstream log(path("model.bin.trainlog.csv"));
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header, "step,batch,recon,kl,total");
  const json summary = json::parse(out_.str());
  EXPECT_TRUE(summary.contains("epsilon"));
  // No temp files left behind.
  for (const auto& e : fs::directory_iterator(dir_)) {
    EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos) << e.path();
  }
}

TEST_F(Cli, SynthEmitsExactRowCountThatReingests) {
  write_data();
  ASSERT_EQ(fit_model(), 0) << err_.str();
  ASSERT_EQ(run({"synth", "--model", path("model.bin"), "-n", "100", "--seed", "3", "--out",
                 path("synth.csv")}),
            0)
      << err_.str();
  const IngestResult r = load_csv(path("synth.csv"), schema_);
  EXPECT_EQ(r.table.rows(), 100);
  EXPECT_EQ(r.log.clamped_cells, 0);
  ASSERT_EQ(run({"synth", "--model", path("model.bin"), "-n", "100", "--seed", "3", "--out",
                 path("again.csv")}),
            0);
  std::ifstream a(path("synth.csv")), b(path("again.csv"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  ASSERT_EQ(run({"synth", "--model", path("model.bin"), "-n", "50", "--label-ratio", "1=1.0",
                 "--out", path("ones.csv")}),
            0)
      << err_.str();
  for (std::size_t c : load_csv(path("ones.csv"), schema_).table.labels()) EXPECT_EQ(c, 1u);
}

TEST_F(Cli, EvalWritesReports) {
  write_data();
  ASSERT_EQ(fit_model(), 0);
  ASSERT_EQ(run({"synth", "--model", path("model.bin"), "-n", "500", "--out", path("s.csv")}), 0);
  ASSERT_EQ(run({"eval", "--schema", path("schema.json"), "--real", path("data.csv"), "--synth",
                 path("s.csv"), "--test", path("data.csv"), "--out", path("report.json")}),
            0)
      << err_.str();
  const json r = load_json(path("report.json"));
  EXPECT_GE(r["marginals"]["average_tvd"].get<double>(), 0.0);
  EXPECT_LE(r["marginals"]["average_tvd"].get<double>(), 1.0);
  EXPECT_GE(r["synthetic_to_real"]["auroc"].get<double>(), 0.0);
  EXPECT_GT(r["real_to_real"]["auroc"].get<double>(), 0.9);
  EXPECT_TRUE(fs::exists(path("report.json.pairs.csv")));
}

TEST_F(Cli, AccountMnistWithinTarget) {
  ASSERT_EQ(run({"account", "--dataset", "mnist", "--out", path("acct.json")}), 0) << err_.str();
  const json j = json::parse(out_.str());
  EXPECT_LE(j["epsilon"].get<double>(), 1.0);
  EXPECT_TRUE(j["within_target"].get<bool>());
  EXPECT_EQ(j["rows"], 63000);
  EXPECT_EQ(j["steps"], 840);
  EXPECT_EQ(load_json(path("acct.json")), j);
}

TEST_F(Cli, AccountDeclaredMechanisms) {
  const json cfg = {{"privacy", {{"epsilon", 2.0}, {"delta", 1e-5}}},
                    {"mechanisms",
                     {{{"kind", "gaussian_release"}, {"sigma", 50.0}, {"releases", 2}},
                      {{"kind", "subsampled_sgd"},
                       {"noise_multiplier", 1.1},
                       {"sampling_probability", 0.01},
                       {"steps", 1000}}}}};
  write_text_file(path("mech.json"), cfg.dump());
  ASSERT_EQ(run({"account", "--config", path("mech.json")}), 0) << err_.str();
  const json j = json::parse(out_.str());
  EXPECT_EQ(j["parts"].size(), 2u);
  const BudgetReport want = total_privacy(
      std::vector<MechanismSpec>{GaussianRelease{50.0, 2}, SubsampledSgd{1.1, 0.01, 1000}}, 1e-5);
  EXPECT_EQ(j["epsilon"].get<double>(), want.epsilon);
}

TEST_F(Cli, BenchReproducible) {
  const std::vector<std::string> a = {"bench", "--d", "3", "--rows", "2000", "--test-rows",
                                      "500", "--eps", "1.0", "--seed", "7", "--epochs", "2",
                                      "--hidden", "16", "--dim-reduce", "3"};
  ASSERT_EQ(run(a), 0) << err_.str();
  const std::string first = out_.str();
  ASSERT_EQ(run(a), 0);
  EXPECT_EQ(out_.str(), first);
  const json j = json::parse(first);
  EXPECT_LE(j["runs"][0]["epsilon"].get<double>(), 1.0);
}

TEST_F(Cli, ErrorsAreStructured) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"account", "--dataset", "nope"}), kExitDomain);
  EXPECT_EQ(json::parse(err_.str())["error"], "domain");
  EXPECT_EQ(run({"account", "--rows", "63000", "--eps", "0.01"}), kExitInfeasible);
  EXPECT_EQ(json::parse(err_.str())["error"], "infeasible_budget");
  write_text_file(path("junk.bin"), "not a model");
  EXPECT_EQ(run({"synth", "--model", path("junk.bin"), "-n", "5", "--out", path("x.csv")}),
            kExitFormat);
  EXPECT_FALSE(fs::exists(path("x.csv")));
  write_data();
  EXPECT_EQ(fit_model("0.001"), kExitInfeasible);
  EXPECT_FALSE(fs::exists(path("model.bin")));
  ASSERT_EQ(fit_model(), 0);
  EXPECT_EQ(run({"synth", "--model", path("model.bin"), "-n", "0", "--out", path("x.csv")}),
            kExitDomain);
}

TEST(Presets, TrainingSplitSizes) {
  EXPECT_EQ(find_preset("mnist")->rows, 63000);
  EXPECT_EQ(find_preset("mnist")->batch_size, 300);
  EXPECT_EQ(find_preset("mnist")->epochs, 4);
  EXPECT_DOUBLE_EQ(find_preset("mnist")->noise_multiplier, 1.4);
  EXPECT_FALSE(find_preset("kaggle")->use_pca);
  EXPECT_FALSE(find_preset("unknown").has_value());
  EXPECT_EQ(dataset_presets().size(), 6u);
}

}  // namespace
}  // namespace phasegen
