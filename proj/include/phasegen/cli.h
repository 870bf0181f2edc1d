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

// Command-line surface: fit, synth, eval, account, bench.

#ifndef PHASEGEN_CLI_H_
#define PHASEGEN_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasegen/pipeline.h"

namespace phasegen {

// Exit codes other than 0.
enum ExitCode : int {
  kExitUsage = 1,
  kExitDomain = 2,
  kExitInfeasible = 3,
  kExitFormat = 4,
  kExitNumerical = 5,
  kExitInternal = 6,
};

// Training rows and DP-SGD settings for a named dataset. Row counts are the
// 90% training split of each table.
struct DatasetPreset {
  std::string name;
  std::int64_t rows = 0;
  double noise_multiplier = 1.4;
  double learning_rate = 1e-3;
  std::int64_t epochs = 1;
  std::int64_t batch_size = 100;
  bool use_pca = true;
};

const std::vector<DatasetPreset>& dataset_presets();
std::optional<DatasetPreset> find_preset(const std::string& name);

// Failures print one JSON object {"error", "message"} to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace phasegen

#endif  // PHASEGEN_CLI_H_
