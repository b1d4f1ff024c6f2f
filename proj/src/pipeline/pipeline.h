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

#ifndef SGGKIT_PIPELINE_PIPELINE_H_
#define SGGKIT_PIPELINE_PIPELINE_H_

#include <string>

#include <json.hpp>

namespace sgg::pipeline {

// Runs parse -> label -> (stats) -> train -> infer -> eval from one JSON
// config, persisting every intermediate artifact under out_dir and writing a
// consolidated report.json (config hash, per-stage seeds, eval reports).
// A failing stage throws with the stage name prefixed.
nlohmann::ordered_json run_pipeline(const nlohmann::json& config,
                                    const std::string& config_dir);

nlohmann::ordered_json run_pipeline_file(const std::string& config_path);

}  // namespace sgg::pipeline

#endif  // SGGKIT_PIPELINE_PIPELINE_H_
