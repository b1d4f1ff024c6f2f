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

#ifndef SGGKIT_CORE_TYPES_H_
#define SGGKIT_CORE_TYPES_H_

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sgg {

// Index 0 of both vocabulary lists is reserved for this sentinel.
inline constexpr const char* kBackgroundName = "__background__";

// Raised on malformed input files; message carries file, line and field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation produces non-finite values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Box {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x1 < x2 && y1 < y2;
  }
  bool operator==(const Box&) const = default;
};

struct Region {
  Box box;
  std::string detector_label;
  double score = 0.0;
  std::vector<double> feature;
};

// Normalized (top, left, bottom, right, width, height, area), all in [0,1].
using BoxGeometry = std::array<double, 7>;

enum class TripletSource { caption, unlocalized_graph, ground_truth };

const char* triplet_source_name(TripletSource s);
std::optional<TripletSource> triplet_source_from_name(const std::string& s);

struct Triplet {
  std::string subject;
  std::string predicate;
  std::string object;
  TripletSource source = TripletSource::caption;
  // (subject_region_index, object_region_index), set once grounded.
  std::optional<std::pair<int, int>> binding;

  bool operator==(const Triplet&) const = default;
};

struct GraphNode {
  Box box;
  int label_index = 0;
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  int subject = 0;
  int predicate = 0;
  int object = 0;
  double score = 0.0;
  bool operator==(const GraphEdge&) const = default;
};

struct SceneGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  bool operator==(const SceneGraph&) const = default;
};

struct ImageRecord {
  std::string image_id;
  double width = 0.0;
  double height = 0.0;
  std::vector<Region> regions;
  std::vector<std::string> captions;
  std::optional<std::vector<Triplet>> parsed_triplets;
  std::optional<SceneGraph> gt;
  // Aligned with gt->nodes when present. Features let label-given evaluation
  // modes run without a detector; tags supply the textual model input.
  std::vector<std::vector<double>> gt_features;
  std::vector<std::string> gt_tags;
};

struct Dataset {
  std::vector<ImageRecord> records;
  // Region feature length, fixed by the first region in the file.
  int feature_dim = 0;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  // Takes category names without the background entry; prepends it.
  static Vocabulary from_names(std::vector<std::string> objects,
                               std::vector<std::string> predicates);

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<std::string>& predicates() const { return predicates_; }
  int object_count() const { return static_cast<int>(objects_.size()); }
  int predicate_count() const { return static_cast<int>(predicates_.size()); }

  // -1 when absent. Lookup is exact (case-sensitive); concept-level matching
  // lives in the lexicon module.
  int object_index(const std::string& name) const;
  int predicate_index(const std::string& name) const;

  void validate() const;

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> predicates_;
  std::unordered_map<std::string, int> object_index_;
  std::unordered_map<std::string, int> predicate_index_;
};

}  // namespace sgg

#endif  // SGGKIT_CORE_TYPES_H_
