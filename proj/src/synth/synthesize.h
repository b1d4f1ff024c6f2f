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

#ifndef SGGKIT_SYNTH_SYNTHESIZE_H_
#define SGGKIT_SYNTH_SYNTHESIZE_H_

#include <string>
#include <vector>

#include "core/dataset.h"
#include "lexicon/lexicon.h"

namespace sgg::synth {

// Synthetic image-caption corpus with planted ground truth. A global
// relation table maps ordered class pairs to predicates, every region pair
// whose class pair is in the table becomes a ground-truth edge, and captions
// realize the planted triplets as "a {s} {p} a {o}". Features are
// class-conditioned prototypes plus Gaussian noise; regions cluster around
// the image center so pair filtering keeps them.
struct SynthConfig {
  int images = 20;
  int object_classes = 6;
  int predicate_classes = 4;
  int regions_per_image = 5;
  int relations = 8;  // ordered class pairs carrying a predicate
  double feature_noise = 0.0;
  int d_vis = 16;
  uint64_t seed = 0;
  double image_size = 256.0;

  void validate() const;
};

struct SynthResult {
  Dataset dataset;
  Vocabulary vocab;
  lex::ConceptLexicon lexicon;
  // Distinct (subject class, predicate, object class) triplets planted.
  int relation_count = 0;
};

SynthResult synthesize(const SynthConfig& cfg);

// The exact zero-noise feature vector of a class.
std::vector<double> class_prototype(uint64_t seed, int class_index, int d_vis);

// Writes dataset.jsonl, vocab.json and lexicon.json under out_dir.
void write_synth(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace sgg::synth

#endif  // SGGKIT_SYNTH_SYNTHESIZE_H_
