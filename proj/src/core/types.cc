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

#include "core/types.h"

namespace sgg {

const char* triplet_source_name(TripletSource s) {
  switch (s) {
    case TripletSource::caption:
      return "caption";
    case TripletSource::unlocalized_graph:
      return "unlocalized_graph";
    case TripletSource::ground_truth:
      return "ground_truth";
  }
  return "caption";
}

std::optional<TripletSource> triplet_source_from_name(const std::string& s) {
  if (s == "caption") return TripletSource::caption;
  if (s == "unlocalized_graph") return TripletSource::unlocalized_graph;
  if (s == "ground_truth") return TripletSource::ground_truth;
  return std::nullopt;
}

Vocabulary Vocabulary::from_names(std::vector<std::string> objects,
                                  std::vector<std::string> predicates) {
  Vocabulary v;
  v.objects_.reserve(objects.size() + 1);
  v.objects_.push_back(kBackgroundName);
  for (auto& name : objects) v.objects_.push_back(std::move(name));
  v.predicates_.reserve(predicates.size() + 1);
  v.predicates_.push_back(kBackgroundName);
  for (auto& name : predicates) v.predicates_.push_back(std::move(name));
  for (int i = 0; i < static_cast<int>(v.objects_.size()); ++i) {
    v.object_index_.emplace(v.objects_[i], i);
  }
  for (int i = 0; i < static_cast<int>(v.predicates_.size()); ++i) {
    v.predicate_index_.emplace(v.predicates_[i], i);
  }
  v.validate();
  return v;
}

int Vocabulary::object_index(const std::string& name) const {
  auto it = object_index_.find(name);
  return it == object_index_.end() ? -1 : it->second;
}

int Vocabulary::predicate_index(const std::string& name) const {
  auto it = predicate_index_.find(name);
  return it == predicate_index_.end() ? -1 : it->second;
}

void Vocabulary::validate() const {
  if (objects_.empty() || objects_.front() != kBackgroundName ||
      predicates_.empty() || predicates_.front() != kBackgroundName) {
    throw SchemaError("vocabulary: background must sit at index 0");
  }
  if (object_index_.size() != objects_.size()) {
    throw SchemaError("vocabulary: duplicate object name");
  }
  if (predicate_index_.size() != predicates_.size()) {
    throw SchemaError("vocabulary: duplicate predicate name");
  }
  for (size_t i = 1; i < objects_.size(); ++i) {
    if (objects_[i].empty() || objects_[i] == kBackgroundName) {
      throw SchemaError("vocabulary: invalid object name at index " +
                        std::to_string(i));
    }
  }
  for (size_t i = 1; i < predicates_.size(); ++i) {
    if (predicates_[i].empty() || predicates_[i] == kBackgroundName) {
      throw SchemaError("vocabulary: invalid predicate name at index " +
                        std::to_string(i));
    }
  }
}

}  // namespace sgg
