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

#ifndef PHASEGEN_MLP_H_
#define PHASEGEN_MLP_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasegen/random.h"

namespace phasegen {

enum class Activation { kIdentity, kRelu, kSigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out × in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;
};

// Fully connected network evaluated one example at a time, with exact
// reverse-mode gradients into a flat parameter vector.
//
// Flat layout: for each layer in order, the weight matrix row-major, then the
// bias.
class Mlp {
 public:
  struct Trace {
    // inputs[l] feeds layer l; pre[l] is its pre-activation.
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> pre;
    Eigen::VectorXd output;
  };

  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. widths = {in, hidden..., out}.
  static Mlp glorot(const std::vector<Eigen::Index>& widths, Activation hidden,
                    Activation output, Rng& rng);

  Trace forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;

  // Backpropagates d(loss)/d(pre-activation of the last layer), accumulating
  // the parameter gradient into grad (length parameter_count()). Returns
  // d(loss)/d(input).
  Eigen::VectorXd backward(const Trace& trace, const Eigen::VectorXd& d_last_pre,
                           Eigen::Ref<Eigen::VectorXd> grad) const;

  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
  // params += scale · direction
  void add_scaled(const Eigen::Ref<const Eigen::VectorXd>& direction, double scale);

  Eigen::Index input_dim() const { return layers_.front().weight.cols(); }
  Eigen::Index output_dim() const { return layers_.back().weight.rows(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<DenseLayer> layers_;
};

Eigen::VectorXd apply_activation(Activation a, const Eigen::VectorXd& pre);

}  // namespace phasegen

#endif  // PHASEGEN_MLP_H_
