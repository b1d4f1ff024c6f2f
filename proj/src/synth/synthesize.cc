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

#include "synth/synthesize.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "core/rng.h"

namespace sgg::synth {

namespace {

const std::vector<std::string>& object_pool() {
  static const std::vector<std::string> pool = {
      "man",   "woman", "dog",    "cat",   "horse",  "car",
      "boat",  "tree",  "bench",  "kite",  "pizza",  "laptop",
      "zebra", "bus",   "train",  "bird",  "person", "table",
      "chair", "hat",   "ball",   "bike",  "fence",  "plate"};
  return pool;
}

// Predicates must be words the caption grammar recognizes.
const std::vector<std::string>& predicate_pool() {
  static const std::vector<std::string> pool = {
      "ride", "hold", "wear",   "drive", "on",    "near",
      "under", "behind", "carry", "watch", "push", "pull"};
  return pool;
}

constexpr uint64_t kProtoStream = 0x50f070;
constexpr uint64_t kRelationStream = 0x9e1a70;
constexpr uint64_t kImageStream = 0x13a9e0;

}  // namespace

void SynthConfig::validate() const {
  if (images <= 0 || object_classes <= 0 || predicate_classes <= 0 ||
      regions_per_image < 2 || d_vis <= 0 || relations <= 0) {
    throw SchemaError("synth config: counts must be positive (>=2 regions)");
  }
  if (predicate_classes > static_cast<int>(predicate_pool().size())) {
    throw SchemaError("synth config: at most " +
                      std::to_string(predicate_pool().size()) +
                      " predicate classes are supported");
  }
  if (relations > object_classes * (object_classes - 1)) {
    throw SchemaError("synth config: more relations than ordered class pairs");
  }
  if (feature_noise < 0.0) {
    throw SchemaError("synth config: feature_noise must be nonnegative");
  }
  if (!(image_size > 0.0)) {
    throw SchemaError("synth config: image_size must be positive");
  }
}

std::vector<double> class_prototype(uint64_t seed, int class_index, int d_vis) {
  Rng rng(mix_seed(seed, kProtoStream, static_cast<uint64_t>(class_index)));
  std::vector<double> proto(d_vis);
  for (double& v : proto) v = rng.normal();
  return proto;
}

SynthResult synthesize(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult result;

  std::vector<std::string> objects;
  for (int i = 0; i < cfg.object_classes; ++i) {
    if (i < static_cast<int>(object_pool().size())) {
      objects.push_back(object_pool()[i]);
    } else {
      objects.push_back("curio" + std::to_string(i));
    }
  }
  std::vector<std::string> predicates(predicate_pool().begin(),
                                      predicate_pool().begin() +
                                          cfg.predicate_classes);
  result.vocab = Vocabulary::from_names(objects, predicates);

  for (const std::string& name : objects) {
    lex::ConceptEntry e;
    e.lemmas = {name};
    e.synsets = {name + ".n.01"};
    e.root = name;
    result.lexicon.add(name, std::move(e));
  }
  for (const std::string& name : predicates) {
    lex::ConceptEntry e;
    e.lemmas = {name};
    e.synsets = {name + ".r.01"};
    e.root = name;
    result.lexicon.add(name, std::move(e));
  }

  // Relation table: ordered class pairs -> predicate class (1-based).
  std::vector<std::pair<int, int>> all_pairs;
  for (int a = 0; a < cfg.object_classes; ++a) {
    for (int b = 0; b < cfg.object_classes; ++b) {
      if (a != b) all_pairs.emplace_back(a, b);
    }
  }
  Rng rel_rng(mix_seed(cfg.seed, kRelationStream));
  rel_rng.shuffle(all_pairs);
  std::map<std::pair<int, int>, int> relation;
  for (int i = 0; i < cfg.relations; ++i) {
    relation[all_pairs[i]] =
        1 + static_cast<int>(rel_rng.uniform_int(cfg.predicate_classes));
  }
  result.relation_count = static_cast<int>(relation.size());
  const std::vector<std::pair<int, int>> relation_keys = [&] {
    std::vector<std::pair<int, int>> keys;
    for (const auto& [k, v] : relation) keys.push_back(k);
    return keys;
  }();

  for (int img = 0; img < cfg.images; ++img) {
    Rng rng(mix_seed(cfg.seed, kImageStream, static_cast<uint64_t>(img)));
    ImageRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04d", img);
    rec.image_id = id;
    rec.width = cfg.image_size;
    rec.height = cfg.image_size;

    // Class assignment; the (img mod relations)-th relation is seeded in so
    // every relation shows up in the corpus.
    std::vector<int> classes(cfg.regions_per_image);
    const auto& seeded = relation_keys[img % relation_keys.size()];
    classes[0] = seeded.first;
    classes[1] = seeded.second;
    for (int i = 2; i < cfg.regions_per_image; ++i) {
      classes[i] = static_cast<int>(rng.uniform_int(cfg.object_classes));
    }

    // Boxes all contain the central square, so every pair overlaps.
    const double s = cfg.image_size;
    SceneGraph gt;
    for (int i = 0; i < cfg.regions_per_image; ++i) {
      Region r;
      r.box.x1 = rng.uniform(0.125 * s, 0.375 * s);
      r.box.y1 = rng.uniform(0.125 * s, 0.375 * s);
      r.box.x2 = rng.uniform(0.625 * s, 0.875 * s);
      r.box.y2 = rng.uniform(0.625 * s, 0.875 * s);
      r.detector_label = objects[classes[i]];
      r.score = 0.5 + 0.5 * rng.uniform();
      r.feature = class_prototype(cfg.seed, classes[i], cfg.d_vis);
      if (cfg.feature_noise > 0.0) {
        for (double& v : r.feature) v += cfg.feature_noise * rng.normal();
      }
      gt.nodes.push_back(GraphNode{r.box, classes[i] + 1});
      rec.gt_features.push_back(r.feature);
      rec.gt_tags.push_back(r.detector_label);
      rec.regions.push_back(std::move(r));
    }
    std::set<std::tuple<int, int, int>> caption_triplets;
    for (int i = 0; i < cfg.regions_per_image; ++i) {
      for (int j = 0; j < cfg.regions_per_image; ++j) {
        if (i == j) continue;
        auto it = relation.find({classes[i], classes[j]});
        if (it == relation.end()) continue;
        gt.edges.push_back(GraphEdge{i, it->second, j, 0.0});
        caption_triplets.emplace(classes[i], it->second, classes[j]);
      }
    }
    rec.gt = std::move(gt);
    for (const auto& [sc, pc, oc] : caption_triplets) {
      rec.captions.push_back("a " + objects[sc] + " " + predicates[pc - 1] +
                             " a " + objects[oc]);
    }
    result.dataset.records.push_back(std::move(rec));
  }
  result.dataset.feature_dim = cfg.d_vis;
  return result;
}

void write_synth(const SynthConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const SynthResult result = synthesize(cfg);
  const std::filesystem::path dir(out_dir);
  save_dataset(result.dataset, (dir / "dataset.jsonl").string());
  save_vocabulary(result.vocab, (dir / "vocab.json").string());
  result.lexicon.save((dir / "lexicon.json").string());
}

}  // namespace sgg::synth
