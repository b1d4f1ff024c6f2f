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

#ifndef SGGKIT_MODEL_CHECKPOINT_H_
#define SGGKIT_MODEL_CHECKPOINT_H_

#include <map>
#include <string>
#include <vector>

#include "model/model.h"

#include <json.hpp>

namespace sgg::model {

// Self-describing binary container; byte layout in docs/checkpoint_format.md.
// Round-trips parameters bit-exactly.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

nlohmann::ordered_json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

// Whitespace-separated text embeddings, one "word v1 ... vD" per line.
std::map<std::string, std::vector<double>> load_embedding_table(
    const std::string& path);

}  // namespace sgg::model

#endif  // SGGKIT_MODEL_CHECKPOINT_H_
