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

#include "phasegen/mechanisms.h"

#include <cmath>
#include <limits>

#include "phasegen/errors.h"

namespace phasegen {

double clip_factor(double norm, double bound) {
  if (!(bound > 0.0)) throw DomainError("clip: bound must be > 0");
  if (norm <= bound || norm == 0.0) return 1.0;
  // Shave a few ulps so the clipped norm never rounds above the bound; this
  // keeps clipping idempotent.
  return bound / norm * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
}

Eigen::VectorXd clip_l2(const Eigen::VectorXd& v, double bound) {
  const double f = clip_factor(v.norm(), bound);
  if (f == 1.0) return v;
  return v * f;
}

Eigen::VectorXd gaussian_noise(Eigen::Index size, double sigma, Rng& rng) {
  if (sigma < 0.0) throw DomainError("gaussian_noise: sigma must be >= 0");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size);
  if (sigma == 0.0) return out;
  for (Eigen::Index i = 0; i < size; ++i) out[i] = sigma * rng.normal();
  return out;
}

Eigen::MatrixXd gaussian_noise(Eigen::Index rows, Eigen::Index cols,
                               double sigma, Rng& rng) {
  if (sigma < 0.0) throw DomainError("gaussian_noise: sigma must be >= 0");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  if (sigma == 0.0) return out;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = sigma * rng.normal();
  }
  return out;
}

Eigen::MatrixXd symmetric_gaussian_noise(Eigen::Index dim, double sigma, Rng& rng) {
  if (sigma < 0.0) throw DomainError("gaussian_noise: sigma must be >= 0");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  if (sigma == 0.0) return out;
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = r; c < dim; ++c) {
      out(r, c) = sigma * rng.normal();
      out(c, r) = out(r, c);
    }
  }
  return out;
}

}  // namespace phasegen
