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

#include "phasegen/pca.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "phasegen/errors.h"
#include "phasegen/mechanisms.h"

namespace phasegen {

PcaModel::PcaModel(Eigen::VectorXd mean, Eigen::MatrixXd components,
                   Eigen::VectorXd eigenvalues)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      eigenvalues_(std::move(eigenvalues)) {
  if (mean_.size() != components_.cols() ||
      eigenvalues_.size() != components_.rows()) {
    throw DomainError("PcaModel: inconsistent dimensions");
  }
}

Eigen::MatrixXd orthonormalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd q = m;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      q.row(i) -= q.row(i).dot(q.row(j)) * q.row(j);
    }
    const double n = q.row(i).norm();
    if (n == 0.0) throw DomainError("orthonormalize_rows: rank deficient");
    q.row(i) /= n;
  }
  return q;
}

PcaModel PcaModel::fit(const Eigen::MatrixXd& rows, Eigen::Index reduced_dim,
                       double sigma, Rng& rng) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n < 2) throw DomainError("pca: need at least two rows");
  if (reduced_dim < 1 || reduced_dim > d) {
    throw DomainError("pca: reduced dimension must lie in [1, input dimension]");
  }
  if (sigma < 0.0) throw DomainError("pca: sigma must be >= 0");
  if ((rows.rowwise().squaredNorm().array() > 1.0 + 1e-12).any()) {
    throw DomainError("pca: rows must have L2 norm <= 1");
  }
  const double nd = static_cast<double>(n);

  Eigen::VectorXd mean = rows.colwise().sum().transpose() / nd;
  mean += gaussian_noise(d, 2.0 * sigma / nd, rng);

  Eigen::MatrixXd scatter = rows.transpose() * rows;
  scatter += symmetric_gaussian_noise(d, sigma, rng);
  scatter -= nd * mean * mean.transpose();
  scatter = 0.5 * (scatter + scatter.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("pca: eigendecomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values[a] > values[b];
  });

  Eigen::MatrixXd components(reduced_dim, d);
  Eigen::VectorXd eigenvalues(reduced_dim);
  for (Eigen::Index k = 0; k < reduced_dim; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    components.row(k) = solver.eigenvectors().col(src).transpose();
    eigenvalues[k] = values[src];
  }
  components = orthonormalize_rows(components);
  // Sign convention: largest-magnitude entry of each component is positive.
  for (Eigen::Index k = 0; k < reduced_dim; ++k) {
    Eigen::Index arg = 0;
    components.row(k).cwiseAbs().maxCoeff(&arg);
    if (components(k, arg) < 0.0) components.row(k) *= -1.0;
  }
  return PcaModel(std::move(mean), std::move(components), std::move(eigenvalues));
}

Eigen::VectorXd PcaModel::transform(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw DomainError("pca transform: dimension mismatch");
  return components_ * (x - mean_);
}

Eigen::VectorXd PcaModel::inverse_transform(const Eigen::VectorXd& z) const {
  if (z.size() != reduced_dim()) {
    throw DomainError("pca inverse_transform: dimension mismatch");
  }
  return components_.transpose() * z + mean_;
}

Eigen::MatrixXd PcaModel::transform_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != input_dim()) throw DomainError("pca transform: dimension mismatch");
  return (rows.rowwise() - mean_.transpose()) * components_.transpose();
}

}  // namespace phasegen
