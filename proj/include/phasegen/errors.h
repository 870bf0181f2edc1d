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

#ifndef PHASEGEN_ERRORS_H_
#define PHASEGEN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace phasegen {

// Precondition violated by an argument (bad σ, order, dimension, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two RDP curves over different order grids were combined.
class GridMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No noise scale in the search interval meets the privacy target.
class InfeasibleBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss or gradient became NaN/inf during training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (CSV, schema, config, model container).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phasegen

#endif  // PHASEGEN_ERRORS_H_
