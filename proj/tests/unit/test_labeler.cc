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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "label/labeler.h"

using namespace sgg;
using namespace sgg::label;

namespace {

Region make_region(double x1, double y1, double x2, double y2,
                   const std::string& tag) {
  Region r;
  r.box = Box{x1, y1, x2, y2};
  r.detector_label = tag;
  r.score = 0.9;
  r.feature = {0.0, 0.0};
  return r;
}

Triplet make_triplet(const char* s, const char* p, const char* o) {
  Triplet t;
  t.subject = s;
  t.predicate = p;
  t.object = o;
  return t;
}

}  // namespace

TEST_CASE("candidate pairs keep overlapping or nearby boxes") {
  PairFilterConfig cfg;

  SUBCASE("overlapping boxes keep both ordered pairs") {
    std::vector<Region> regions = {make_region(0, 0, 10, 10, "a"),
                                   make_region(5, 5, 15, 15, "b")};
    const auto pairs = candidate_pairs(regions, cfg);
    CHECK(pairs == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
  }
  SUBCASE("boxes at opposite corners of a large image are dropped") {
    // centers (5,5) and (995,995): distance 990*sqrt(2) ~ 1400; union box
    // diagonal 1000*sqrt(2) ~ 1414, half of it 707 < 1400.
    std::vector<Region> regions = {make_region(0, 0, 10, 10, "a"),
                                   make_region(990, 990, 1000, 1000, "b")};
    CHECK(candidate_pairs(regions, cfg).empty());
    cfg.require_overlap_or_near = false;
    CHECK(candidate_pairs(regions, cfg).size() == 2);
  }
  SUBCASE("disjoint but near boxes pass the distance test") {
    std::vector<Region> regions = {make_region(0, 0, 10, 10, "a"),
                                   make_region(12, 0, 22, 10, "b")};
    CHECK(candidate_pairs(regions, cfg).size() == 2);
  }
  SUBCASE("all ordered pairs without the filter") {
    std::vector<Region> regions;
    for (int i = 0; i < 4; ++i) {
      regions.push_back(make_region(i * 100, 0, i * 100 + 10, 10, "x"));
    }
    cfg.require_overlap_or_near = false;
    CHECK(candidate_pairs(regions, cfg).size() == 12);
  }
}

TEST_CASE("assign_labels matches triplets to region pairs") {
  const Vocabulary vocab = Vocabulary::from_names({"man", "boat"}, {"drive"});
  lex::ConceptLexicon lexicon;  // empty: exact/root matching only
  PairFilterConfig cfg;

  ImageRecord rec;
  rec.image_id = "img";
  rec.width = rec.height = 100;
  rec.regions = {make_region(0, 0, 50, 50, "Man"),
                 make_region(20, 20, 80, 80, "Boat")};

  SUBCASE("matched pair carries the triplet's vocabulary indices") {
    const auto pairs = assign_labels(
        rec, {make_triplet("man", "drive", "boat")}, lexicon, vocab, cfg, 0);
    REQUIRE(pairs.size() == 2);
    const LabeledPair& pos = pairs[0].positive() ? pairs[0] : pairs[1];
    CHECK(pos.subject_region == 0);
    CHECK(pos.object_region == 1);
    CHECK(pos.subject_label == 1);   // man
    CHECK(pos.predicate_label == 1); // drive
    CHECK(pos.object_label == 2);    // boat
    // the reverse pair has no matching triplet: background with detector
    // labels resolved against the vocabulary
    const LabeledPair& neg = pairs[0].positive() ? pairs[1] : pairs[0];
    CHECK(neg.predicate_label == 0);
    CHECK(neg.subject_label == 2);  // Boat
    CHECK(neg.object_label == 1);   // Man
  }
  SUBCASE("no matching triplet emits only background pairs") {
    const auto pairs = assign_labels(
        rec, {make_triplet("cat", "drive", "boat")}, lexicon, vocab, cfg, 0);
    for (const LabeledPair& p : pairs) CHECK_FALSE(p.positive());
  }
  SUBCASE("triplet fields outside the vocabulary cannot label a pair") {
    const auto pairs = assign_labels(
        rec, {make_triplet("man", "teleport", "boat")}, lexicon, vocab, cfg, 0);
    for (const LabeledPair& p : pairs) CHECK_FALSE(p.positive());
  }
}

TEST_CASE("multi-match selection is seeded and reproducible") {
  const Vocabulary vocab =
      Vocabulary::from_names({"man", "boat"}, {"drive", "ride"});
  lex::ConceptLexicon lexicon;
  PairFilterConfig cfg;
  const std::vector<Triplet> triplets = {make_triplet("man", "drive", "boat"),
                                         make_triplet("man", "ride", "boat")};

  // 20 images x several man->boat pairs, each a uniform pick between the two
  // triplets.
  auto run = [&](uint64_t seed) {
    std::vector<LabeledPair> all;
    for (int i = 0; i < 20; ++i) {
      ImageRecord rec;
      rec.image_id = "img_" + std::to_string(i);
      rec.width = rec.height = 100;
      rec.regions = {make_region(0, 0, 50, 50, "man"),
                     make_region(10, 10, 60, 60, "man"),
                     make_region(20, 20, 70, 70, "boat"),
                     make_region(30, 30, 80, 80, "boat")};
      const auto pairs = assign_labels(rec, triplets, lexicon, vocab, cfg, seed);
      all.insert(all.end(), pairs.begin(), pairs.end());
    }
    return all;
  };
  const auto a7 = run(7);
  const auto b7 = run(7);
  CHECK(a7 == b7);
  const auto a8 = run(8);
  CHECK(a7 != a8);  // at least one multi-match pick differs

  // positives always carry in-vocabulary, non-background labels
  int positives = 0;
  for (const LabeledPair& p : a7) {
    if (!p.positive()) continue;
    ++positives;
    CHECK(p.subject_label > 0);
    CHECK(p.subject_label < vocab.object_count());
    CHECK(p.predicate_label > 0);
    CHECK(p.predicate_label < vocab.predicate_count());
    CHECK(p.object_label > 0);
  }
  CHECK(positives >= 20);
}

TEST_CASE("assign_labels emits exactly the candidate pairs") {
  const Vocabulary vocab = Vocabulary::from_names({"man"}, {"near"});
  lex::ConceptLexicon lexicon;
  PairFilterConfig cfg;
  ImageRecord rec;
  rec.image_id = "img";
  rec.width = rec.height = 1000;
  rec.regions = {make_region(0, 0, 10, 10, "man"),
                 make_region(5, 5, 15, 15, "man"),
                 make_region(990, 990, 1000, 1000, "man")};
  const auto pairs = assign_labels(rec, {}, lexicon, vocab, cfg, 0);
  const auto expected = candidate_pairs(rec.regions, cfg);
  REQUIRE(pairs.size() == expected.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(std::make_pair(pairs[i].subject_region, pairs[i].object_region) ==
          expected[i]);
  }
}

TEST_CASE("loss weights are caption/target ratios with identity fallback") {
  FrequencyTable caption;
  caption.object_counts = {0, 100, 40, 7};
  caption.predicate_counts = {0, 100, 0, 5};
  FrequencyTable target;
  target.object_counts = {0, 50, 40, 0};
  target.predicate_counts = {0, 50, 3, 5};

  const LossWeights w = compute_loss_weights(caption, target);
  CHECK(w.object_weights[0] == 1.0);  // background untouched
  CHECK(w.object_weights[1] == doctest::Approx(2.0));
  CHECK(w.object_weights[2] == doctest::Approx(1.0));
  CHECK(w.object_weights[3] == 1.0);  // target missing -> no weight
  CHECK(w.predicate_weights[1] == doctest::Approx(2.0));
  CHECK(w.predicate_weights[2] == 1.0);  // caption missing -> no weight
  CHECK(w.predicate_weights[3] == doctest::Approx(1.0));
  for (double x : w.object_weights) CHECK(x > 0.0);
}

TEST_CASE("training batch sampling: cap, ratio and determinism") {
  std::vector<LabeledPair> pairs;
  auto add = [&pairs](int count, int predicate) {
    for (int i = 0; i < count; ++i) {
      LabeledPair p;
      p.subject_region = static_cast<int>(pairs.size());
      p.object_region = p.subject_region + 1000;
      p.predicate_label = predicate;
      p.subject_label = p.object_label = 1;
      pairs.push_back(p);
    }
  };

  SUBCASE("20 positives sample down to the cap, reproducibly") {
    add(20, 1);
    BatchSampleConfig cfg;
    Rng rng1(7), rng2(7);
    const auto a = sample_training_batch(pairs, cfg, rng1);
    const auto b = sample_training_batch(pairs, cfg, rng2);
    CHECK(a.size() == 16);
    CHECK(a == b);
    for (const auto& p : a) CHECK(p.positive());
  }
  SUBCASE("2 positives draw up to 6 negatives at the 3x ratio") {
    add(2, 1);
    add(50, 0);
    BatchSampleConfig cfg;
    Rng rng(3);
    const auto batch = sample_training_batch(pairs, cfg, rng);
    REQUIRE(batch.size() == 8);
    CHECK(batch[0].positive());
    CHECK(batch[1].positive());
    for (size_t i = 2; i < batch.size(); ++i) CHECK_FALSE(batch[i].positive());
  }
  SUBCASE("negative_ratio 0 disables background pairs") {
    add(3, 1);
    add(50, 0);
    BatchSampleConfig cfg;
    cfg.negative_ratio = 0.0;
    Rng rng(3);
    const auto batch = sample_training_batch(pairs, cfg, rng);
    CHECK(batch.size() == 3);
    for (const auto& p : batch) CHECK(p.positive());
  }
  SUBCASE("zero positives sample nothing") {
    add(30, 0);
    BatchSampleConfig cfg;
    Rng rng(3);
    CHECK(sample_training_batch(pairs, cfg, rng).empty());
  }
}

TEST_CASE("stats file feeds loss weights back to training") {
  const Vocabulary vocab = Vocabulary::from_names({"man", "boat"}, {"ride"});
  FrequencyTable caption, target;
  caption.object_counts = {0, 10, 4};
  caption.predicate_counts = {0, 8};
  target.object_counts = {0, 5, 0};
  target.predicate_counts = {0, 2};
  const LossWeights weights = compute_loss_weights(caption, target);
  const std::string path =
      (std::filesystem::temp_directory_path() / "sggkit_stats.json").string();
  save_stats(caption, target, weights, vocab, path);
  const LossWeights loaded = load_loss_weights(path);
  CHECK(loaded.object_weights == weights.object_weights);
  CHECK(loaded.predicate_weights == weights.predicate_weights);
  CHECK(loaded.object_weights[1] == doctest::Approx(2.0));
  CHECK(loaded.predicate_weights[1] == doctest::Approx(4.0));
}

TEST_CASE("label files round-trip") {
  LabelSet set;
  ImageLabels img;
  img.image_id = "img_0";
  LabeledPair p;
  p.subject_region = 0;
  p.object_region = 1;
  p.subject_label = 2;
  p.predicate_label = 1;
  p.object_label = 3;
  img.pairs.push_back(p);
  set.images.push_back(img);
  const std::string path =
      (std::filesystem::temp_directory_path() / "sggkit_labels.jsonl").string();
  save_labels(set, path);
  const LabelSet loaded = load_labels(path);
  REQUIRE(loaded.images.size() == 1);
  CHECK(loaded.images[0].image_id == "img_0");
  CHECK(loaded.images[0].pairs[0] == p);
}
