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
#include <map>
#include <set>

#include "core/rng.h"
#include "infer/inference.h"
#include "synth/synthesize.h"
#include "text/parser.h"

using namespace sgg;
using namespace sgg::infer;
using model::Vec;

namespace {

// Brute-force aggregation oracle: plain loops, explicit candidate
// enumeration, no shared code with the implementation.
SceneGraph oracle_aggregate(const std::vector<PairScores>& scores,
                            const std::vector<Box>& boxes) {
  const int n = static_cast<int>(boxes.size());
  SceneGraph graph;
  std::vector<int> labels(n, -1);
  std::vector<double> label_probs(n, 0.0);
  for (int r = 0; r < n; ++r) {
    std::vector<double> sum;
    int votes = 0;
    for (const PairScores& ps : scores) {
      const Vec* v = nullptr;
      if (ps.subject_region == r) v = &ps.subject_probs;
      if (ps.object_region == r) v = &ps.object_probs;
      if (v == nullptr) continue;
      if (sum.empty()) sum.assign(v->size(), 0.0);
      for (int c = 0; c < v->size(); ++c) sum[c] += (*v)(c);
      ++votes;
    }
    if (votes == 0) continue;
    // enumerate every class; first maximum wins
    int best = 0;
    for (int c = 1; c < static_cast<int>(sum.size()); ++c) {
      if (sum[c] > sum[best]) best = c;
    }
    labels[r] = best;
    label_probs[r] = sum[best] / votes;
    graph.nodes.push_back(GraphNode{boxes[r], best});
  }
  for (const PairScores& ps : scores) {
    int best = 0;
    for (int c = 1; c < ps.predicate_probs.size(); ++c) {
      if (ps.predicate_probs(c) > ps.predicate_probs(best)) best = c;
    }
    if (best == 0) continue;
    GraphEdge e;
    e.subject = ps.subject_region;
    e.predicate = best;
    e.object = ps.object_region;
    e.score = label_probs[ps.subject_region] * ps.predicate_probs(best) *
              label_probs[ps.object_region];
    graph.edges.push_back(e);
  }
  std::stable_sort(graph.edges.begin(), graph.edges.end(),
                   [](const GraphEdge& a, const GraphEdge& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.subject != b.subject) return a.subject < b.subject;
                     return a.object < b.object;
                   });
  return graph;
}

Vec random_dist(Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(0.001, 1.0);
  v /= v.sum();
  return v;
}

std::vector<PairScores> random_scores(Rng& rng, int n_regions, int n_obj,
                                      int n_pred) {
  std::vector<PairScores> scores;
  for (int k = 0; k < n_regions; ++k) {
    for (int l = 0; l < n_regions; ++l) {
      if (k == l) continue;
      PairScores ps;
      ps.subject_region = k;
      ps.object_region = l;
      ps.subject_probs = random_dist(rng, n_obj);
      ps.predicate_probs = random_dist(rng, n_pred);
      ps.object_probs = random_dist(rng, n_obj);
      scores.push_back(std::move(ps));
    }
  }
  return scores;
}

std::vector<Box> stub_boxes(int n) {
  std::vector<Box> boxes;
  for (int i = 0; i < n; ++i) {
    boxes.push_back(Box{10.0 * i, 0, 10.0 * i + 8, 8});
  }
  return boxes;
}

// Trained-ish model fixture for the end-to-end inference paths.
struct InferFixture {
  Dataset dataset;
  Vocabulary vocab;
  lex::ConceptLexicon lexicon;
  model::Model model;
};

InferFixture make_fixture(uint64_t seed = 0) {
  synth::SynthConfig scfg;
  scfg.images = 3;
  scfg.object_classes = 4;
  scfg.predicate_classes = 3;
  scfg.regions_per_image = 4;
  scfg.relations = 5;
  scfg.d_vis = 8;
  scfg.seed = seed;
  synth::SynthResult s = synth::synthesize(scfg);
  model::ModelConfig cfg;
  cfg.d = 16;
  cfg.n_heads = 2;
  cfg.head_dim = 8;
  cfg.n_layers = 1;
  cfg.mlp_dim = 20;
  cfg.d_vis = scfg.d_vis;
  cfg.d_word = 8;
  cfg.dropout_p = 0.1;  // inference must ignore it
  model::Model m =
      model::build_model(cfg, s.vocab, model::collect_tag_words(s.dataset), seed);
  return InferFixture{std::move(s.dataset), s.vocab, std::move(s.lexicon),
                      std::move(m)};
}

}  // namespace

TEST_CASE("score_pairs enumerates ordered pairs") {
  InferFixture fx = make_fixture();
  const ImageRecord& rec = fx.dataset.records[0];
  InferOptions opts;
  const auto scores =
      score_pairs(fx.model, rec.regions, rec.width, rec.height, opts);
  CHECK(scores.size() == rec.regions.size() * (rec.regions.size() - 1));
  for (const PairScores& ps : scores) {
    CHECK(ps.subject_probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ps.predicate_probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ps.object_probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  std::vector<Region> one(rec.regions.begin(), rec.regions.begin() + 1);
  CHECK(score_pairs(fx.model, one, rec.width, rec.height, opts).empty());
}

TEST_CASE("aggregate_graph equals the exhaustive oracle on random fixtures") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(3));      // <= 4 regions
    const int n_obj = 2 + static_cast<int>(rng.uniform_int(4));  // <= 5 classes
    const int n_pred = 2 + static_cast<int>(rng.uniform_int(4));
    const auto scores = random_scores(rng, n, n_obj, n_pred);
    const auto boxes = stub_boxes(n);
    std::vector<Region> regions;
    for (const Box& b : boxes) {
      Region r;
      r.box = b;
      regions.push_back(r);
    }
    const SceneGraph got = aggregate_graph(scores, regions);
    const SceneGraph want = oracle_aggregate(scores, boxes);
    REQUIRE(got.nodes.size() == want.nodes.size());
    for (size_t i = 0; i < got.nodes.size(); ++i) {
      CHECK(got.nodes[i].label_index == want.nodes[i].label_index);
    }
    REQUIRE(got.edges.size() == want.edges.size());
    for (size_t i = 0; i < got.edges.size(); ++i) {
      CHECK(got.edges[i].subject == want.edges[i].subject);
      CHECK(got.edges[i].predicate == want.edges[i].predicate);
      CHECK(got.edges[i].object == want.edges[i].object);
      CHECK(got.edges[i].score == doctest::Approx(want.edges[i].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("graph constraint holds over random inferences") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(4));
    const auto scores = random_scores(rng, n, 4, 4);
    std::vector<Region> regions;
    for (const Box& b : stub_boxes(n)) {
      Region r;
      r.box = b;
      regions.push_back(r);
    }
    const SceneGraph g = aggregate_graph(scores, regions);
    std::set<std::pair<int, int>> seen;
    for (const GraphEdge& e : g.edges) {
      CHECK(seen.emplace(e.subject, e.object).second);  // at most one edge
      CHECK(e.predicate != 0);
    }
    // edges sorted by score descending
    for (size_t i = 1; i < g.edges.size(); ++i) {
      CHECK(g.edges[i - 1].score >= g.edges[i].score);
    }
  }
}

TEST_CASE("background-argmax pairs produce no edge; shared votes average") {
  PairScores ps;
  ps.subject_region = 0;
  ps.object_region = 1;
  ps.subject_probs = Vec::Zero(3);
  ps.subject_probs << 0.2, 0.7, 0.1;
  ps.object_probs = Vec::Zero(3);
  ps.object_probs << 0.1, 0.2, 0.7;
  ps.predicate_probs = Vec::Zero(3);
  ps.predicate_probs << 0.6, 0.3, 0.1;  // background wins
  const auto boxes = stub_boxes(2);
  std::vector<Region> regions;
  for (const Box& b : boxes) {
    Region r;
    r.box = b;
    regions.push_back(r);
  }
  const SceneGraph g = aggregate_graph({ps}, regions);
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.empty());

  // two pairs voting identically on a shared region keep the vote unchanged
  PairScores a = ps, b = ps;
  b.object_region = 0;
  b.subject_region = 1;
  b.subject_probs = ps.object_probs;
  b.object_probs = ps.subject_probs;
  const auto dists = aggregate_scores({a, b}, 2);
  CHECK(dists.node_probs[0](1) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(dists.node_probs[1](2) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("open-set mapping moves probability mass onto matched targets") {
  const Vocabulary source =
      Vocabulary::from_names({"tortoise", "puppy", "swinge"}, {"ride", "zorb"});
  const Vocabulary target = Vocabulary::from_names({"animal"}, {"ride"});
  lex::ConceptLexicon lexicon;
  {
    lex::ConceptEntry e;
    e.lemmas = {"tortoise"};
    e.synsets = {"tortoise.n.01"};
    e.hypernyms = {"animal.n.01"};
    e.root = "tortoise";
    lexicon.add("tortoise", std::move(e));
  }
  {
    lex::ConceptEntry e;
    e.lemmas = {"puppy"};
    e.synsets = {"puppy.n.01"};
    e.hypernyms = {"dog.n.01", "animal.n.01"};
    e.root = "puppy";
    lexicon.add("puppy", std::move(e));
  }
  {
    lex::ConceptEntry e;
    e.lemmas = {"animal"};
    e.synsets = {"animal.n.01"};
    e.root = "animal";
    lexicon.add("animal", std::move(e));
  }

  GraphDistributions dists;
  Vec node(4);
  node << 0.1, 0.3, 0.4, 0.2;  // bg, tortoise, puppy, swinge
  dists.node_probs = {node, node};
  Vec pred(3);
  pred << 0.2, 0.5, 0.3;  // bg, ride, zorb
  dists.pair_predicates.emplace_back(0, 1, pred);

  const GraphDistributions mapped =
      open_set_map(dists, source, target, lexicon, Transfer::sum);
  // both tortoise and puppy mass land on "animal"; swinge mass drops
  CHECK(mapped.node_probs[0](0) == doctest::Approx(0.1));
  CHECK(mapped.node_probs[0](1) == doctest::Approx(0.7));
  const Vec& mp = std::get<2>(mapped.pair_predicates[0]);
  CHECK(mp(0) == doctest::Approx(0.2));
  CHECK(mp(1) == doctest::Approx(0.5));  // ride -> ride (exact name)

  const GraphDistributions mx =
      open_set_map(dists, source, target, lexicon, Transfer::max);
  CHECK(mx.node_probs[0](1) == doctest::Approx(0.4));  // max, not sum

  // a predicate whose mass maps nowhere yields no edge after aggregation
  GraphDistributions orphan;
  orphan.node_probs = {node, node};
  Vec zpred(3);
  zpred << 0.0, 0.0, 1.0;  // all mass on "zorb"
  orphan.pair_predicates.emplace_back(0, 1, zpred);
  const GraphDistributions orphan_mapped =
      open_set_map(orphan, source, target, lexicon, Transfer::sum);
  const SceneGraph g =
      graph_from_distributions(orphan_mapped, stub_boxes(2));
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.empty());

  // mapped labels always live inside the target vocabulary
  for (const Vec& p : orphan_mapped.node_probs) {
    CHECK(p.size() == target.object_count());
  }
}

TEST_CASE("input ablations") {
  InferFixture fx = make_fixture(2);
  const ImageRecord& rec = fx.dataset.records[0];
  InferOptions none;
  const auto base = score_pairs(fx.model, rec.regions, rec.width, rec.height, none);

  SUBCASE("mode none equals score_pairs exactly") {
    const auto again =
        score_pairs(fx.model, rec.regions, rec.width, rec.height, none);
    REQUIRE(again.size() == base.size());
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK((base[i].predicate_probs - again[i].predicate_probs)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
  }
  SUBCASE("mask_visual equals manually averaged features") {
    InferOptions opts;
    opts.ablate = Ablation::visual;
    const auto masked =
        score_pairs(fx.model, rec.regions, rec.width, rec.height, opts);
    std::vector<Region> averaged = rec.regions;
    std::vector<double> mean(fx.model.config.d_vis, 0.0);
    for (const Region& r : averaged) {
      for (size_t c = 0; c < mean.size(); ++c) mean[c] += r.feature[c];
    }
    for (double& v : mean) v /= static_cast<double>(averaged.size());
    for (Region& r : averaged) r.feature = mean;
    const auto manual =
        score_pairs(fx.model, averaged, rec.width, rec.height, none);
    REQUIRE(masked.size() == manual.size());
    for (size_t i = 0; i < masked.size(); ++i) {
      CHECK((masked[i].subject_probs - manual[i].subject_probs)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }
    // scores must differ from the unmasked run on a non-degenerate fixture
    bool differs = false;
    for (size_t i = 0; i < masked.size(); ++i) {
      if ((masked[i].subject_probs - base[i].subject_probs).cwiseAbs().maxCoeff() >
          1e-12) {
        differs = true;
      }
    }
    CHECK(differs);
  }
  SUBCASE("mask_text changes the outputs and is seeded") {
    InferOptions opts;
    opts.ablate = Ablation::text;
    opts.seed = 5;
    const auto masked =
        score_pairs(fx.model, rec.regions, rec.width, rec.height, opts);
    const auto masked_again =
        score_pairs(fx.model, rec.regions, rec.width, rec.height, opts);
    bool differs = false;
    for (size_t i = 0; i < masked.size(); ++i) {
      CHECK((masked[i].predicate_probs - masked_again[i].predicate_probs)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      if ((masked[i].predicate_probs - base[i].predicate_probs)
              .cwiseAbs()
              .maxCoeff() > 1e-12) {
        differs = true;
      }
    }
    CHECK(differs);
  }
}

TEST_CASE("sgcls/predcls run on ground-truth boxes") {
  InferFixture fx = make_fixture(4);
  const ImageRecord& rec = fx.dataset.records[0];
  InferOptions opts;
  opts.task = Task::predcls;
  const ImageGraph g = infer_record(fx.model, rec, opts);
  REQUIRE(g.graph.nodes.size() == rec.gt->nodes.size());
  for (size_t i = 0; i < g.graph.nodes.size(); ++i) {
    CHECK(g.graph.nodes[i].label_index == rec.gt->nodes[i].label_index);
    CHECK(g.graph.nodes[i].box == rec.gt->nodes[i].box);
  }
  // predcls edge scores are pure predicate probabilities (node probs are 1)
  for (const GraphEdge& e : g.graph.edges) {
    CHECK(e.score <= 1.0);
    CHECK(e.predicate > 0);
  }

  opts.task = Task::sgcls;
  const ImageGraph g2 = infer_record(fx.model, rec, opts);
  CHECK(g2.graph.nodes.size() == rec.gt->nodes.size());

  ImageRecord stripped = rec;
  stripped.gt_features.assign(rec.gt->nodes.size(), {});
  CHECK_THROWS_WITH_AS(infer_record(fx.model, stripped, opts),
                       doctest::Contains("features"), SchemaError);

  ImageRecord no_gt = rec;
  no_gt.gt.reset();
  CHECK_THROWS_AS(infer_record(fx.model, no_gt, opts), SchemaError);
}

TEST_CASE("top_regions caps detections by score") {
  InferFixture fx = make_fixture(6);
  ImageRecord rec = fx.dataset.records[0];
  // force distinct scores
  for (size_t i = 0; i < rec.regions.size(); ++i) {
    rec.regions[i].score = 0.1 * static_cast<double>(i + 1);
  }
  InferOptions opts;
  opts.top_regions = 2;
  const ImageGraph g = infer_record(fx.model, rec, opts);
  CHECK(g.graph.nodes.size() == 2);
  // the two highest-scoring regions are the last two
  CHECK(g.graph.nodes[0].box == rec.regions[rec.regions.size() - 2].box);
  CHECK(g.graph.nodes[1].box == rec.regions[rec.regions.size() - 1].box);
}

TEST_CASE("threaded inference matches single-threaded byte for byte") {
  InferFixture fx = make_fixture(8);
  InferOptions opts;
  const GraphSet a = infer_dataset(fx.model, fx.dataset, opts, nullptr, nullptr, 1);
  const GraphSet b = infer_dataset(fx.model, fx.dataset, opts, nullptr, nullptr, 3);
  REQUIRE(a.images.size() == b.images.size());
  for (size_t i = 0; i < a.images.size(); ++i) {
    CHECK(a.images[i].image_id == b.images[i].image_id);
    CHECK(a.images[i].graph == b.images[i].graph);
  }
}
