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

#ifndef SGGKIT_CORE_DATASET_H_
#define SGGKIT_CORE_DATASET_H_

#include <string>
#include <vector>

#include "core/types.h"

#include <json.hpp>

namespace sgg {

// JSON-lines dataset of ImageRecord objects. The region feature length of
// the first record fixes the dataset feature dim; every later feature must
// match it. Schema violations throw SchemaError naming file, line and field.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& dataset, const std::string& path);

// {"objects": [...], "predicates": [...]}; background is prepended on load
// and stripped on save.
Vocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);

// Predicted scene graphs, one image per line.
struct ImageGraph {
  std::string image_id;
  SceneGraph graph;
};

struct GraphSet {
  std::vector<ImageGraph> images;
};

GraphSet load_graphs(const std::string& path);
void save_graphs(const GraphSet& graphs, const std::string& path);

nlohmann::ordered_json record_to_json(const ImageRecord& record);
ImageRecord record_from_json(const nlohmann::json& j, const std::string& where,
                             int* feature_dim);

nlohmann::ordered_json graph_to_json(const ImageGraph& g);

// Reads a whole file; throws SchemaError when missing.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sgg

#endif  // SGGKIT_CORE_DATASET_H_
