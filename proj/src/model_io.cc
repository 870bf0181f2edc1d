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

#include "phasegen/model_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "phasegen/csv_io.h"
#include "phasegen/errors.h"

namespace phasegen {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'P', 'H', 'G', 'M'};

static_assert(std::endian::native == std::endian::little,
              "model files assume a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw FormatError("model file: truncated");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off),
                static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

// Collects tensors in a fixed order and records name and shape.
struct TensorWriter {
  json list = json::array();
  std::string data;

  void add(const std::string& name, const Eigen::MatrixXd& m) {
    list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(data, m(r, c));
    }
  }
  void add(const std::string& name, const Eigen::VectorXd& v) {
    add(name, Eigen::MatrixXd(v));
  }
};

struct TensorReader {
  const json& list;
  std::string_view data;
  std::size_t index = 0;
  std::size_t pos = 0;

  Eigen::MatrixXd next(const std::string& name) {
    if (index >= list.size()) throw FormatError("model file: missing tensor " + name);
    const json& t = list[index++];
    if (t.at("name").get<std::string>() != name) {
      throw FormatError("model file: expected tensor " + name);
    }
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw FormatError("model file: bad shape for " + name);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(data, pos);
    }
    return m;
  }
  Eigen::VectorXd next_vector(const std::string& name) {
    Eigen::MatrixXd m = next(name);
    if (m.cols() != 1) throw FormatError("model file: " + name + " is not a vector");
    return m.col(0);
  }
};

json net_architecture(const Mlp& net) {
  json layers = json::array();
  for (const DenseLayer& l : net.layers()) {
    layers.push_back({{"in", l.weight.cols()},
                      {"out", l.weight.rows()},
                      {"activation", to_string(l.activation)}});
  }
  return layers;
}

void write_net(TensorWriter& w, const std::string& prefix, const Mlp& net) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    w.add(prefix + "." + std::to_string(l) + ".weight", net.layers()[l].weight);
    w.add(prefix + "." + std::to_string(l) + ".bias", net.layers()[l].bias);
  }
}

Mlp read_net(TensorReader& r, const std::string& prefix, const json& arch) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    DenseLayer layer;
    layer.weight = r.next(prefix + "." + std::to_string(l) + ".weight");
    layer.bias = r.next_vector(prefix + "." + std::to_string(l) + ".bias");
    layer.activation = activation_from_string(arch[l].at("activation").get<std::string>());
    if (layer.weight.cols() != arch[l].at("in").get<Eigen::Index>() ||
        layer.weight.rows() != arch[l].at("out").get<Eigen::Index>()) {
      throw FormatError("model file: layer shape disagrees with architecture");
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

struct Parsed {
  json header;
  std::string_view tensors;
};

Parsed parse(std::string_view bytes) {
  constexpr std::size_t kFixed = 4 + 4 + 8;
  if (bytes.size() < kFixed + 4) throw FormatError("model file: truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("model file: bad magic");
  // Version first: a file from another format may checksum differently.
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kModelFormatVersion) {
    throw FormatError("model file: format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kModelFormatVersion) +
                      ")");
  }
  std::size_t tail = bytes.size() - 4;
  const auto stored = get<std::uint32_t>(bytes, tail);
  if (stored != crc32_of(bytes.substr(0, bytes.size() - 4))) {
    throw FormatError("model file: checksum mismatch (file corrupt or truncated)");
  }
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (header_len > bytes.size() - 4 - pos) throw FormatError("model file: truncated header");
  Parsed p;
  try {
    p.header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: bad header: ") + e.what());
  }
  pos += header_len;
  p.tensors = bytes.substr(pos, bytes.size() - 4 - pos);
  return p;
}

}  // namespace

std::string serialize_model(const GenerativeModel& model) {
  TensorWriter w;
  w.add("pca.mean", model.pca.mean());
  w.add("pca.components", model.pca.components());
  w.add("pca.eigenvalues", model.pca.eigenvalues());
  w.add("prior.weights", model.prior.weights());
  w.add("prior.means", model.prior.means());
  w.add("prior.variances", model.prior.variances());
  json arch{{"head", to_string(model.nets.head)},
            {"decoder", net_architecture(model.nets.decoder)},
            {"encoder_var", nullptr}};
  if (model.nets.encoder_var) {
    arch["encoder_var"] = net_architecture(*model.nets.encoder_var);
    write_net(w, "encoder_var", *model.nets.encoder_var);
  }
  write_net(w, "decoder", model.nets.decoder);

  const json header{{"format", kModelFormatVersion},
                    {"schema", model.schema.to_json()},
                    {"config", model.config.to_json()},
                    {"privacy", privacy_to_json(model.privacy)},
                    {"noise", {{"pca", model.noise.pca},
                               {"em", model.noise.em},
                               {"sgd", model.noise.sgd}}},
                    {"budget", budget_to_json(model.budget)},
                    {"training_rows", model.training_rows},
                    {"seed", model.config.seed},
                    {"architecture", arch},
                    {"tensors", w.list}};
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  out += w.data;
  put<std::uint32_t>(out, crc32_of(out));
  return out;
}

json read_model_header(std::string_view bytes) { return parse(bytes).header; }

GenerativeModel deserialize_model(std::string_view bytes) {
  const Parsed p = parse(bytes);
  const json& h = p.header;
  try {
    for (const auto& [key, _] : h.items()) {
      if (std::find(kModelFields.begin(), kModelFields.end(), key) == kModelFields.end()) {
        throw FormatError("model file: unexpected header field '" + key + "'");
      }
    }
    GenerativeModel m;
    m.schema = ColumnSchema::from_json(h.at("schema"));
    m.config = ModelConfig::from_json(h.at("config"));
    m.privacy = privacy_from_json(h.at("privacy"));
    m.noise = {h.at("noise").at("pca").get<double>(), h.at("noise").at("em").get<double>(),
               h.at("noise").at("sgd").get<double>()};
    m.budget = budget_from_json(h.at("budget"));
    m.training_rows = h.at("training_rows").get<std::int64_t>();

    TensorReader r{h.at("tensors"), p.tensors};
    Eigen::VectorXd mean = r.next_vector("pca.mean");
    Eigen::MatrixXd comps = r.next("pca.components");
    Eigen::VectorXd eig = r.next_vector("pca.eigenvalues");
    m.pca = PcaModel(std::move(mean), std::move(comps), std::move(eig));
    Eigen::VectorXd weights = r.next_vector("prior.weights");
    Eigen::MatrixXd means = r.next("prior.means");
    Eigen::MatrixXd vars = r.next("prior.variances");
    m.prior = MoG(std::move(weights), std::move(means), std::move(vars));

    const json& arch = h.at("architecture");
    m.nets.head = decoder_head_from_string(arch.at("head").get<std::string>());
    if (!arch.at("encoder_var").is_null()) {
      m.nets.encoder_var = read_net(r, "encoder_var", arch.at("encoder_var"));
    }
    m.nets.decoder = read_net(r, "decoder", arch.at("decoder"));
    if (r.index != r.list.size() || r.pos != r.data.size()) {
      throw FormatError("model file: trailing tensor data");
    }
    if (m.pca.input_dim() != m.schema.width() || m.nets.data_dim() != m.schema.width() ||
        m.nets.latent_dim() != m.pca.reduced_dim() || m.prior.dim() != m.pca.reduced_dim()) {
      throw FormatError("model file: tensor shapes disagree with the schema");
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

void save_model(const GenerativeModel& model, const std::string& path) {
  write_text_file(path, serialize_model(model));
}

GenerativeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace phasegen
