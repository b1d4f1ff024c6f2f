// Copyright 2026 The sggkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "model/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>

namespace sgg::model {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'S', 'G', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw SchemaError(path + ": truncated checkpoint");
  return value;
}

}  // namespace

ordered_json config_to_json(const ModelConfig& cfg) {
  ordered_json j;
  j["d"] = cfg.d;
  j["n_layers"] = cfg.n_layers;
  j["n_heads"] = cfg.n_heads;
  j["head_dim"] = cfg.head_dim;
  j["mlp_dim"] = cfg.mlp_dim;
  j["d_vis"] = cfg.d_vis;
  j["d_word"] = cfg.d_word;
  j["word_vocab_size"] = cfg.word_vocab_size;
  j["n_obj_classes"] = cfg.n_obj_classes;
  j["n_pred_classes"] = cfg.n_pred_classes;
  j["dropout_p"] = cfg.dropout_p;
  j["ln_eps"] = cfg.ln_eps;
  j["train_word_embeddings"] = cfg.train_word_embeddings;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  auto get = [&j](const char* key, auto* dst) {
    if (j.contains(key)) *dst = j.at(key).get<std::decay_t<decltype(*dst)>>();
  };
  get("d", &cfg.d);
  get("n_layers", &cfg.n_layers);
  get("n_heads", &cfg.n_heads);
  get("head_dim", &cfg.head_dim);
  get("mlp_dim", &cfg.mlp_dim);
  get("d_vis", &cfg.d_vis);
  get("d_word", &cfg.d_word);
  get("word_vocab_size", &cfg.word_vocab_size);
  get("n_obj_classes", &cfg.n_obj_classes);
  get("n_pred_classes", &cfg.n_pred_classes);
  get("dropout_p", &cfg.dropout_p);
  get("ln_eps", &cfg.ln_eps);
  get("train_word_embeddings", &cfg.train_word_embeddings);
  return cfg;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");

  ordered_json header;
  header["version"] = kVersion;
  header["config"] = config_to_json(model.config);
  header["init_seed"] = model.init_seed;
  header["words"] = model.words;
  header["objects"] = std::vector<std::string>(model.vocab.objects().begin() + 1,
                                               model.vocab.objects().end());
  header["predicates"] = std::vector<std::string>(
      model.vocab.predicates().begin() + 1, model.vocab.predicates().end());
  header["tensors"] = ordered_json::array();
  auto refs = registry(const_cast<ModelParams&>(model.params));
  for (const TensorRef& ref : refs) {
    ordered_json t;
    t["name"] = ref.name;
    t["rows"] = ref.tensor->rows();
    t["cols"] = ref.tensor->cols();
    header["tensors"].push_back(std::move(t));
  }
  const std::string header_str = header.dump();

  out.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint64_t>(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const TensorRef& ref : refs) {
    const Mat& m = *ref.tensor;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        write_pod<double>(out, m(r, c));
      }
    }
  }
  if (!out) throw SchemaError(path + ": write failed");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open file");

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SchemaError(path + ": not a sggkit checkpoint");
  }
  const auto version = read_pod<uint32_t>(in, path);
  if (version != kVersion) {
    throw SchemaError(path + ": unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto header_len = read_pod<uint64_t>(in, path);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw SchemaError(path + ": truncated checkpoint header");
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": invalid checkpoint header: " + e.what());
  }

  Model model;
  model.config = config_from_json(header.at("config"));
  model.config.validate();
  model.init_seed = header.at("init_seed").get<uint64_t>();
  for (const auto& w : header.at("words")) {
    model.words.push_back(w.get<std::string>());
  }
  for (int i = 0; i < static_cast<int>(model.words.size()); ++i) {
    model.word_index.emplace(model.words[i], i);
  }
  std::vector<std::string> objects, predicates;
  for (const auto& v : header.at("objects")) objects.push_back(v.get<std::string>());
  for (const auto& v : header.at("predicates")) {
    predicates.push_back(v.get<std::string>());
  }
  model.vocab = Vocabulary::from_names(std::move(objects), std::move(predicates));

  model.params = init_params(model.config, 0);  // shapes; data overwritten
  auto refs = registry(model.params);
  const auto& tensors = header.at("tensors");
  if (tensors.size() != refs.size()) {
    throw SchemaError(path + ": tensor directory does not match this build");
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != refs[i].name ||
        t.at("rows").get<Eigen::Index>() != refs[i].tensor->rows() ||
        t.at("cols").get<Eigen::Index>() != refs[i].tensor->cols()) {
      throw SchemaError(path + ": tensor mismatch at '" + refs[i].name + "'");
    }
    Mat& m = *refs[i].tensor;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = read_pod<double>(in, path);
      }
    }
  }
  return model;
}

std::map<std::string, std::vector<double>> load_embedding_table(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::map<std::string, std::vector<double>> table;
  std::string line;
  int lineno = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vec;
    double v;
    while (ss >> v) vec.push_back(v);
    if (word.empty() || vec.empty()) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": expected 'word v1 ... vD'");
    }
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": inconsistent vector length");
    }
    table[word] = std::move(vec);
  }
  return table;
}

}  // namespace sgg::model
