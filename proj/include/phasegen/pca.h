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

#ifndef PHASEGEN_PCA_H_
#define PHASEGEN_PCA_H_

#include <Eigen/Dense>

#include "phasegen/random.h"

namespace phasegen {

// Private PCA used as the frozen encoder mean. transform() is the
// dimensionality reduction f, inverse_transform() its reconstruction g.
class PcaModel {
 public:
  PcaModel() = default;
  PcaModel(Eigen::VectorXd mean, Eigen::MatrixXd components,
           Eigen::VectorXd eigenvalues);

  // Fits on rows with ‖x‖₂ <= 1. Releases the column mean with noise of
  // standard deviation 2σ/N and the second-moment matrix Σ xxᵀ with a
  // symmetric N(0, σ²) perturbation, then centers on the noisy mean and
  // keeps the top reduced_dim eigenvectors. σ = 0 gives exact PCA.
  static PcaModel fit(const Eigen::MatrixXd& rows, Eigen::Index reduced_dim,
                      double sigma, Rng& rng);

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
  Eigen::VectorXd inverse_transform(const Eigen::VectorXd& z) const;
  // Row-wise transform of an N×d matrix.
  Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& rows) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  // reduced_dim × input_dim, rows orthonormal.
  const Eigen::MatrixXd& components() const { return components_; }
  // Eigenvalues of the noisy centered scatter matrix, nonincreasing.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  Eigen::Index input_dim() const { return components_.cols(); }
  Eigen::Index reduced_dim() const { return components_.rows(); }

  // Number of Gaussian releases fit() makes (mean, second-moment matrix).
  static constexpr int kReleases = 2;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  Eigen::VectorXd eigenvalues_;
};

// Modified Gram-Schmidt on the rows of m.
Eigen::MatrixXd orthonormalize_rows(const Eigen::MatrixXd& m);

}  // namespace phasegen

#endif  // PHASEGEN_PCA_H_
