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

#include "label/labeler.h"

#include <algorithm>
#include <fstream>

#include "core/dataset.h"
#include "core/geometry.h"

#include <json.hpp>

namespace sgg::label {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::pair<int, int>> candidate_pairs(
    const std::vector<Region>& regions, const PairFilterConfig& cfg) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(regions.size());
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k == l) continue;
      if (cfg.require_overlap_or_near) {
        const Box& a = regions[k].box;
        const Box& b = regions[l].box;
        if (iou(a, b) <= 0.0) {
          const double limit = cfg.distance_ratio * diagonal(union_box(a, b));
          if (center_distance(a, b) > limit) continue;
        }
      }
      pairs.emplace_back(k, l);
    }
  }
  return pairs;
}

std::vector<LabeledPair> assign_labels(const ImageRecord& record,
                                       const std::vector<Triplet>& triplets,
                                       const lex::ConceptLexicon& lexicon,
                                       const Vocabulary& vocab,
                                       const PairFilterConfig& cfg,
                                       uint64_t seed) {
  Rng rng(mix_seed(seed, fnv1a64(record.image_id)));
  const auto pairs = candidate_pairs(record.regions, cfg);

  // Vocabulary indices of each triplet; triplets with any field outside the
  // vocabulary cannot produce labels and are skipped.
  struct Indexed {
    const Triplet* t;
    int s, p, o;
  };
  std::vector<Indexed> usable;
  usable.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    const int s = vocab.object_index(t.subject);
    const int p = vocab.predicate_index(t.predicate);
    const int o = vocab.object_index(t.object);
    if (s > 0 && p > 0 && o > 0) usable.push_back({&t, s, p, o});
  }

  // Detector label -> object category, resolved once per region.
  std::vector<int> region_category(record.regions.size(), -1);
  for (size_t i = 0; i < record.regions.size(); ++i) {
    region_category[i] = lex::match_object_category(
        record.regions[i].detector_label, vocab, lexicon);
  }

  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  for (const auto& [k, l] : pairs) {
    std::vector<const Indexed*> matched;
    for (const Indexed& idx : usable) {
      if (lexicon.match(record.regions[k].detector_label, idx.t->subject) &&
          lexicon.match(record.regions[l].detector_label, idx.t->object)) {
        matched.push_back(&idx);
      }
    }
    LabeledPair lp;
    lp.subject_region = k;
    lp.object_region = l;
    if (!matched.empty()) {
      const Indexed* pick =
          matched[static_cast<size_t>(rng.uniform_int(matched.size()))];
      lp.subject_label = pick->s;
      lp.predicate_label = pick->p;
      lp.object_label = pick->o;
    } else {
      lp.subject_label = std::max(region_category[k], 0);
      lp.object_label = std::max(region_category[l], 0);
      lp.predicate_label = 0;
    }
    out.push_back(lp);
  }
  return out;
}

std::vector<LabeledPair> sample_training_batch(
    const std::vector<LabeledPair>& pairs, const BatchSampleConfig& cfg,
    Rng& rng) {
  std::vector<LabeledPair> positives, negatives;
  for (const LabeledPair& p : pairs) {
    (p.positive() ? positives : negatives).push_back(p);
  }
  const int cap = std::max(cfg.per_image, 0);
  if (static_cast<int>(positives.size()) > cap) {
    rng.shuffle(positives);
    positives.resize(cap);
  }
  const int room = cap - static_cast<int>(positives.size());
  const int want_neg = static_cast<int>(
      std::min<double>(room, cfg.negative_ratio * positives.size()));
  if (static_cast<int>(negatives.size()) > want_neg) {
    rng.shuffle(negatives);
    negatives.resize(std::max(want_neg, 0));
  }
  positives.insert(positives.end(), negatives.begin(), negatives.end());
  return positives;
}

FrequencyTable caption_frequencies(const Dataset& dataset,
                                   const Vocabulary& vocab,
                                   const lex::ConceptLexicon& lexicon) {
  FrequencyTable table;
  table.object_counts.assign(vocab.object_count(), 0.0);
  table.predicate_counts.assign(vocab.predicate_count(), 0.0);
  for (const ImageRecord& rec : dataset.records) {
    if (!rec.parsed_triplets) continue;
    const auto filtered = lex::filter_triplets(*rec.parsed_triplets, vocab,
                                               lexicon, lex::FilterMode::closed);
    for (const Triplet& t : filtered) {
      table.object_counts[vocab.object_index(t.subject)] += 1.0;
      table.object_counts[vocab.object_index(t.object)] += 1.0;
      table.predicate_counts[vocab.predicate_index(t.predicate)] += 1.0;
    }
  }
  return table;
}

FrequencyTable target_frequencies(const Dataset& dataset,
                                  const Vocabulary& vocab) {
  FrequencyTable table;
  table.object_counts.assign(vocab.object_count(), 0.0);
  table.predicate_counts.assign(vocab.predicate_count(), 0.0);
  for (const ImageRecord& rec : dataset.records) {
    if (!rec.gt) continue;
    for (const GraphNode& node : rec.gt->nodes) {
      if (node.label_index < vocab.object_count()) {
        table.object_counts[node.label_index] += 1.0;
      }
    }
    for (const GraphEdge& e : rec.gt->edges) {
      if (e.predicate < vocab.predicate_count()) {
        table.predicate_counts[e.predicate] += 1.0;
      }
    }
  }
  return table;
}

LossWeights LossWeights::identity(int n_obj_classes, int n_pred_classes) {
  LossWeights w;
  w.object_weights.assign(n_obj_classes, 1.0);
  w.predicate_weights.assign(n_pred_classes, 1.0);
  return w;
}

LossWeights compute_loss_weights(const FrequencyTable& caption,
                                 const FrequencyTable& target) {
  auto ratio = [](const std::vector<double>& cap,
                  const std::vector<double>& tgt) {
    std::vector<double> w(cap.size(), 1.0);
    for (size_t i = 1; i < cap.size(); ++i) {
      const double t = i < tgt.size() ? tgt[i] : 0.0;
      if (cap[i] > 0.0 && t > 0.0) w[i] = cap[i] / t;
    }
    return w;
  };
  LossWeights w;
  w.object_weights = ratio(caption.object_counts, target.object_counts);
  w.predicate_weights = ratio(caption.predicate_counts, target.predicate_counts);
  return w;
}

LabelSet label_dataset(const Dataset& dataset, const Vocabulary& vocab,
                       const lex::ConceptLexicon& lexicon,
                       const PairFilterConfig& cfg, lex::FilterMode mode,
                       uint64_t seed) {
  LabelSet out;
  out.images.reserve(dataset.records.size());
  for (const ImageRecord& rec : dataset.records) {
    if (rec.regions.size() < 2) continue;
    std::vector<Triplet> triplets;
    if (rec.parsed_triplets) {
      triplets = lex::filter_triplets(*rec.parsed_triplets, vocab, lexicon, mode);
    }
    ImageLabels labels;
    labels.image_id = rec.image_id;
    labels.pairs = assign_labels(rec, triplets, lexicon, vocab, cfg, seed);
    if (labels.pairs.empty()) continue;  // no candidate pairs survived
    out.images.push_back(std::move(labels));
  }
  return out;
}

LabelSet load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  LabelSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    ImageLabels labels;
    labels.image_id = j.at("image_id").get<std::string>();
    for (const auto& pj : j.at("pairs")) {
      LabeledPair p;
      p.subject_region = pj.at("s_region").get<int>();
      p.object_region = pj.at("o_region").get<int>();
      p.subject_label = pj.at("s_label").get<int>();
      p.predicate_label = pj.at("p_label").get<int>();
      p.object_label = pj.at("o_label").get<int>();
      if (p.subject_region == p.object_region || p.subject_region < 0 ||
          p.object_region < 0) {
        throw SchemaError(where + ": pairs: region indices must be distinct");
      }
      labels.pairs.push_back(p);
    }
    set.images.push_back(std::move(labels));
  }
  return set;
}

void save_labels(const LabelSet& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  for (const ImageLabels& img : labels.images) {
    ordered_json j;
    j["image_id"] = img.image_id;
    j["pairs"] = ordered_json::array();
    for (const LabeledPair& p : img.pairs) {
      ordered_json pj;
      pj["s_region"] = p.subject_region;
      pj["o_region"] = p.object_region;
      pj["s_label"] = p.subject_label;
      pj["p_label"] = p.predicate_label;
      pj["o_label"] = p.object_label;
      j["pairs"].push_back(std::move(pj));
    }
    out << j.dump() << "\n";
  }
  if (!out) throw SchemaError(path + ": write failed");
}

LossWeights load_loss_weights(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  LossWeights w;
  for (const auto& v : j.at("object_weights")) {
    w.object_weights.push_back(v.get<double>());
  }
  for (const auto& v : j.at("predicate_weights")) {
    w.predicate_weights.push_back(v.get<double>());
  }
  for (double x : w.object_weights) {
    if (!(x > 0.0)) throw SchemaError(path + ": object_weights must be positive");
  }
  for (double x : w.predicate_weights) {
    if (!(x > 0.0)) throw SchemaError(path + ": predicate_weights must be positive");
  }
  return w;
}

void save_stats(const FrequencyTable& caption, const FrequencyTable& target,
                const LossWeights& weights, const Vocabulary& vocab,
                const std::string& path) {
  ordered_json j;
  j["object_names"] = vocab.objects();
  j["predicate_names"] = vocab.predicates();
  j["object_caption_freq"] = caption.object_counts;
  j["predicate_caption_freq"] = caption.predicate_counts;
  j["object_target_freq"] = target.object_counts;
  j["predicate_target_freq"] = target.predicate_counts;
  j["object_weights"] = weights.object_weights;
  j["predicate_weights"] = weights.predicate_weights;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace sgg::label
