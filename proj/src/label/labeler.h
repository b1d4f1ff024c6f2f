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

#ifndef SGGKIT_LABEL_LABELER_H_
#define SGGKIT_LABEL_LABELER_H_

#include <string>
#include <utility>
#include <vector>

#include "core/rng.h"
#include "core/types.h"
#include "lexicon/lexicon.h"

namespace sgg::label {

struct PairFilterConfig {
  bool require_overlap_or_near = true;
  // Kept when boxes overlap or the center distance is at most this fraction
  // of the union-box diagonal.
  double distance_ratio = 0.5;
};

// Ordered region pairs (k,l), k != l, that plausibly hold a relationship.
std::vector<std::pair<int, int>> candidate_pairs(
    const std::vector<Region>& regions, const PairFilterConfig& cfg);

struct LabeledPair {
  int subject_region = 0;
  int object_region = 0;
  // Vocabulary indices; 0 is background.
  int subject_label = 0;
  int predicate_label = 0;
  int object_label = 0;

  bool positive() const { return predicate_label != 0; }
  bool operator==(const LabeledPair&) const = default;
};

// Greedy triplet-to-pair matching. Every candidate pair is emitted: pairs
// with a matching triplet carry its labels (one picked uniformly when
// several match); the rest are background pairs whose subject/object labels
// come from detector-label matching when one exists. The random stream is
// seeded by (seed, image_id hash) so per-image work is order independent.
std::vector<LabeledPair> assign_labels(const ImageRecord& record,
                                       const std::vector<Triplet>& triplets,
                                       const lex::ConceptLexicon& lexicon,
                                       const Vocabulary& vocab,
                                       const PairFilterConfig& cfg,
                                       uint64_t seed);

struct BatchSampleConfig {
  int per_image = 16;
  // Background pairs drawn per positive; 0 disables negatives entirely.
  double negative_ratio = 3.0;
};

// Up to per_image pairs, positives first, then background pairs capped at
// negative_ratio x (sampled positives).
std::vector<LabeledPair> sample_training_batch(
    const std::vector<LabeledPair>& pairs, const BatchSampleConfig& cfg,
    Rng& rng);

struct FrequencyTable {
  std::vector<double> object_counts;     // indexed by vocabulary, 0 = bg
  std::vector<double> predicate_counts;
};

// Category counts over closed-set filtered caption triplets.
FrequencyTable caption_frequencies(const Dataset& dataset,
                                   const Vocabulary& vocab,
                                   const lex::ConceptLexicon& lexicon);

// Category counts over ground-truth graphs.
FrequencyTable target_frequencies(const Dataset& dataset,
                                  const Vocabulary& vocab);

struct LossWeights {
  std::vector<double> object_weights;
  std::vector<double> predicate_weights;

  static LossWeights identity(int n_obj_classes, int n_pred_classes);
};

// weight[c] = caption_freq[c] / target_freq[c] where both counts are
// positive; categories missing on either side keep weight 1, background
// keeps weight 1.
LossWeights compute_loss_weights(const FrequencyTable& caption,
                                 const FrequencyTable& target);

struct ImageLabels {
  std::string image_id;
  std::vector<LabeledPair> pairs;
};

struct LabelSet {
  std::vector<ImageLabels> images;
};

// Runs candidate filtering + closed/open triplet filtering + assignment over
// a parsed dataset.
LabelSet label_dataset(const Dataset& dataset, const Vocabulary& vocab,
                       const lex::ConceptLexicon& lexicon,
                       const PairFilterConfig& cfg, lex::FilterMode mode,
                       uint64_t seed);

LabelSet load_labels(const std::string& path);
void save_labels(const LabelSet& labels, const std::string& path);

LossWeights load_loss_weights(const std::string& path);
void save_stats(const FrequencyTable& caption, const FrequencyTable& target,
                const LossWeights& weights, const Vocabulary& vocab,
                const std::string& path);

}  // namespace sgg::label

#endif  // SGGKIT_LABEL_LABELER_H_
