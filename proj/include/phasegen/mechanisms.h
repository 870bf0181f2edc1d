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

// Noise and clipping primitives shared by all three private mechanisms.

#ifndef PHASEGEN_MECHANISMS_H_
#define PHASEGEN_MECHANISMS_H_

#include <Eigen/Dense>

#include "phasegen/random.h"

namespace phasegen {

// v · min(1, bound / ‖v‖₂). A zero vector passes through unchanged.
Eigen::VectorXd clip_l2(const Eigen::VectorXd& v, double bound);

// Scale factor clip_l2 would apply, min(1, bound / norm).
double clip_factor(double norm, double bound);

// i.i.d. N(0, σ²) entries. σ = 0 returns zeros without consuming the stream.
Eigen::VectorXd gaussian_noise(Eigen::Index size, double sigma, Rng& rng);

// Entries are drawn in row-major order.
Eigen::MatrixXd gaussian_noise(Eigen::Index rows, Eigen::Index cols,
                               double sigma, Rng& rng);

// Symmetric matrix whose upper triangle (diagonal included) is i.i.d.
// N(0, σ²), mirrored below.
Eigen::MatrixXd symmetric_gaussian_noise(Eigen::Index dim, double sigma, Rng& rng);

}  // namespace phasegen

#endif  // PHASEGEN_MECHANISMS_H_
