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

#include "phasegen/mlp.h"

#include <cmath>

#include "phasegen/errors.h"

namespace phasegen {
namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw FormatError("unknown activation '" + name + "'");
}

Eigen::VectorXd apply_activation(Activation a, const Eigen::VectorXd& pre) {
  switch (a) {
    case Activation::kIdentity:
      return pre;
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kSigmoid:
      return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return pre;
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.bias.size() != layer.weight.rows()) {
      throw DomainError("Mlp: bias does not match weight rows");
    }
    if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
      throw DomainError("Mlp: layer shapes do not chain");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw DomainError("Mlp: non-finite parameters");
    }
  }
}

Mlp Mlp::glorot(const std::vector<Eigen::Index>& widths, Activation hidden,
                Activation output, Rng& rng) {
  if (widths.size() < 2) throw DomainError("Mlp: need at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index in = widths[l];
    const Eigen::Index out = widths[l + 1];
    if (in < 1 || out < 1) throw DomainError("Mlp: widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weight(r, c) = limit * (2.0 * rng.uniform() - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = l + 2 == widths.size() ? output : hidden;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Mlp::Trace Mlp::forward(const Eigen::VectorXd& x) const {
  if (layers_.empty()) throw DomainError("Mlp: no layers");
  if (x.size() != input_dim()) throw DomainError("Mlp: input dimension mismatch");
  Trace trace;
  trace.inputs.reserve(layers_.size());
  trace.pre.reserve(layers_.size());
  Eigen::VectorXd a = x;
  for (const DenseLayer& layer : layers_) {
    trace.inputs.push_back(a);
    trace.pre.push_back(layer.weight * a + layer.bias);
    a = apply_activation(layer.activation, trace.pre.back());
  }
  trace.output = std::move(a);
  return trace;
}

Eigen::VectorXd Mlp::predict(const Eigen::VectorXd& x) const {
  return forward(x).output;
}

Eigen::VectorXd Mlp::backward(const Trace& trace, const Eigen::VectorXd& d_last_pre,
                              Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != parameter_count()) throw DomainError("Mlp: gradient size mismatch");
  if (d_last_pre.size() != output_dim()) throw DomainError("Mlp: output gradient size mismatch");
  Eigen::VectorXd delta = d_last_pre;
  Eigen::Index offset = parameter_count();
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const Eigen::Index out = layer.weight.rows();
    const Eigen::Index in = layer.weight.cols();
    offset -= out * in + out;
    if (l + 1 < layers_.size()) {
      // delta arrives as d/d(post-activation); move it to pre-activation.
      const Eigen::VectorXd& pre = trace.pre[l];
      switch (layer.activation) {
        case Activation::kIdentity:
          break;
        case Activation::kRelu:
          delta = (pre.array() > 0.0).select(delta, 0.0);
          break;
        case Activation::kSigmoid: {
          const Eigen::VectorXd s = apply_activation(Activation::kSigmoid, pre);
          delta = delta.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
          break;
        }
      }
    }
    RowMajorMap(grad.data() + offset, out, in).noalias() +=
        delta * trace.inputs[l].transpose();
    grad.segment(offset + out * in, out) += delta;
    delta = layer.weight.transpose() * delta;
  }
  return delta;
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index offset = 0;
  for (const DenseLayer& layer : layers_) {
    const Eigen::Index out = layer.weight.rows();
    const Eigen::Index in = layer.weight.cols();
    RowMajorMap(flat.data() + offset, out, in) = layer.weight;
    flat.segment(offset + out * in, out) = layer.bias;
    offset += out * in + out;
  }
  return flat;
}

void Mlp::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != parameter_count()) throw DomainError("Mlp: parameter size mismatch");
  Eigen::Index offset = 0;
  for (DenseLayer& layer : layers_) {
    const Eigen::Index out = layer.weight.rows();
    const Eigen::Index in = layer.weight.cols();
    layer.weight = ConstRowMajorMap(flat.data() + offset, out, in);
    layer.bias = flat.segment(offset + out * in, out);
    offset += out * in + out;
  }
}

void Mlp::add_scaled(const Eigen::Ref<const Eigen::VectorXd>& direction, double scale) {
  if (direction.size() != parameter_count()) {
    throw DomainError("Mlp: parameter size mismatch");
  }
  Eigen::Index offset = 0;
  for (DenseLayer& layer : layers_) {
    const Eigen::Index out = layer.weight.rows();
    const Eigen::Index in = layer.weight.cols();
    layer.weight += scale * ConstRowMajorMap(direction.data() + offset, out, in);
    layer.bias += scale * direction.segment(offset + out * in, out);
    offset += out * in + out;
  }
}

}  // namespace phasegen
