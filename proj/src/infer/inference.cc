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

#include "infer/inference.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

namespace sgg::infer {

namespace {

using model::Row;

std::vector<Region> top_regions_by_score(const std::vector<Region>& regions,
                                         int cap) {
  if (cap <= 0 || static_cast<int>(regions.size()) <= cap) return regions;
  std::vector<int> order(regions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return regions[a].score > regions[b].score;
  });
  order.resize(cap);
  std::sort(order.begin(), order.end());  // keep original ordering
  std::vector<Region> out;
  out.reserve(order.size());
  for (int i : order) out.push_back(regions[i]);
  return out;
}

}  // namespace

std::vector<PairScores> score_pairs(const model::Model& model,
                                    const std::vector<Region>& regions,
                                    double width, double height,
                                    const InferOptions& opts) {
  const int n = static_cast<int>(regions.size());
  std::vector<PairScores> out;
  if (n < 2) return out;

  std::vector<Region> working = regions;
  if (opts.ablate == Ablation::visual) {
    std::vector<double> mean(model.config.d_vis, 0.0);
    for (const Region& r : working) {
      for (int c = 0; c < model.config.d_vis; ++c) mean[c] += r.feature[c];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    for (Region& r : working) r.feature = mean;
  }
  std::optional<Row> text_override;
  if (opts.ablate == Ablation::text) {
    Rng rng(mix_seed(opts.seed, 0x7e37u));
    Row vec(model.config.d_word);
    for (int c = 0; c < model.config.d_word; ++c) vec(c) = 0.02 * rng.normal();
    text_override = std::move(vec);
  }

  out.reserve(static_cast<size_t>(n) * (n - 1));
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      if (k == l) continue;
      model::PairInput in =
          model::make_pair_input(model, working, width, height, k, l);
      if (text_override) {
        in.subject_word_override = text_override;
        in.object_word_override = text_override;
      }
      const model::HeadProbs probs =
          model::forward_pair(model, in, /*train=*/false, 0);
      PairScores ps;
      ps.subject_region = k;
      ps.object_region = l;
      ps.subject_probs = probs.subject;
      ps.predicate_probs = probs.predicate;
      ps.object_probs = probs.object;
      out.push_back(std::move(ps));
    }
  }
  return out;
}

GraphDistributions aggregate_scores(const std::vector<PairScores>& scores,
                                    int n_regions) {
  GraphDistributions out;
  out.node_probs.resize(n_regions);
  std::vector<int> votes(n_regions, 0);
  for (const PairScores& ps : scores) {
    auto add = [&](int region, const Vec& p) {
      if (out.node_probs[region].size() == 0) {
        out.node_probs[region] = Vec::Zero(p.size());
      }
      out.node_probs[region] += p;
      ++votes[region];
    };
    add(ps.subject_region, ps.subject_probs);
    add(ps.object_region, ps.object_probs);
    out.pair_predicates.emplace_back(ps.subject_region, ps.object_region,
                                     ps.predicate_probs);
  }
  for (int r = 0; r < n_regions; ++r) {
    if (votes[r] > 0) {
      out.node_probs[r] /= static_cast<double>(votes[r]);
    } else {
      out.node_probs[r] = Vec::Zero(0);
    }
  }
  return out;
}

SceneGraph graph_from_distributions(const GraphDistributions& dists,
                                    const std::vector<Box>& boxes) {
  SceneGraph graph;
  const int n = static_cast<int>(dists.node_probs.size());
  std::vector<int> remap(n, -1);
  std::vector<int> labels(n, -1);
  std::vector<double> label_probs(n, 0.0);
  for (int r = 0; r < n; ++r) {
    const Vec& p = dists.node_probs[r];
    if (p.size() == 0 || p.sum() <= 0.0) continue;  // maps nowhere
    Eigen::Index best;
    label_probs[r] = p.maxCoeff(&best);
    labels[r] = static_cast<int>(best);
    remap[r] = static_cast<int>(graph.nodes.size());
    graph.nodes.push_back(GraphNode{boxes[r], labels[r]});
  }
  for (const auto& [k, l, pred] : dists.pair_predicates) {
    if (remap[k] < 0 || remap[l] < 0) continue;
    if (pred.size() == 0 || pred.sum() <= 0.0) continue;
    Eigen::Index best;
    const double p_pred = pred.maxCoeff(&best);
    if (best == 0) continue;  // background wins: no edge
    GraphEdge e;
    e.subject = remap[k];
    e.predicate = static_cast<int>(best);
    e.object = remap[l];
    e.score = label_probs[k] * p_pred * label_probs[l];
    graph.edges.push_back(e);
  }
  std::sort(graph.edges.begin(), graph.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.subject != b.subject) return a.subject < b.subject;
              return a.object < b.object;
            });
  return graph;
}

SceneGraph aggregate_graph(const std::vector<PairScores>& scores,
                           const std::vector<Region>& regions) {
  std::vector<Box> boxes;
  boxes.reserve(regions.size());
  for (const Region& r : regions) boxes.push_back(r.box);
  return graph_from_distributions(
      aggregate_scores(scores, static_cast<int>(regions.size())), boxes);
}

GraphDistributions open_set_map(const GraphDistributions& dists,
                                const Vocabulary& source,
                                const Vocabulary& target,
                                const lex::ConceptLexicon& lexicon,
                                Transfer transfer) {
  // Category-to-category match matrices, built once per call.
  auto build = [&](const std::vector<std::string>& src,
                   const std::vector<std::string>& tgt) {
    std::vector<std::vector<int>> matches(src.size());
    for (size_t i = 1; i < src.size(); ++i) {
      for (size_t j = 1; j < tgt.size(); ++j) {
        if (lexicon.match(src[i], tgt[j])) {
          matches[i].push_back(static_cast<int>(j));
        }
      }
    }
    return matches;
  };
  const auto obj_matches = build(source.objects(), target.objects());
  const auto pred_matches = build(source.predicates(), target.predicates());

  auto map_dist = [&](const Vec& src, const std::vector<std::vector<int>>& m,
                      int target_size) {
    if (src.size() == 0) return Vec(Vec::Zero(0));
    Vec out = Vec::Zero(target_size);
    out(0) = src(0);  // background passes through
    for (int i = 1; i < src.size(); ++i) {
      for (int j : m[i]) {
        if (transfer == Transfer::sum) {
          out(j) += src(i);
        } else {
          out(j) = std::max(out(j), src(i));
        }
      }
    }
    return out;
  };

  GraphDistributions out;
  out.node_probs.reserve(dists.node_probs.size());
  for (const Vec& p : dists.node_probs) {
    out.node_probs.push_back(map_dist(p, obj_matches, target.object_count()));
  }
  for (const auto& [k, l, pred] : dists.pair_predicates) {
    out.pair_predicates.emplace_back(
        k, l, map_dist(pred, pred_matches, target.predicate_count()));
  }
  return out;
}

ImageGraph infer_record(const model::Model& model, const ImageRecord& record,
                        const InferOptions& opts,
                        const Vocabulary* target_vocab,
                        const lex::ConceptLexicon* lexicon) {
  if (opts.open_set && (target_vocab == nullptr || lexicon == nullptr)) {
    throw SchemaError("infer: open-set mapping needs a target vocabulary and lexicon");
  }
  std::vector<Region> regions;
  if (opts.task == Task::sgdet) {
    regions = top_regions_by_score(record.regions, opts.top_regions);
  } else {
    if (!record.gt) {
      throw SchemaError("infer: image '" + record.image_id +
                        "' has no ground truth for sgcls/predcls");
    }
    for (size_t i = 0; i < record.gt->nodes.size(); ++i) {
      Region r;
      r.box = record.gt->nodes[i].box;
      if (i >= record.gt_features.size() || record.gt_features[i].empty()) {
        throw SchemaError(
            "infer: image '" + record.image_id +
            "': sgcls/predcls need gt region features in the dataset");
      }
      r.feature = record.gt_features[i];
      r.detector_label = (i < record.gt_tags.size() && !record.gt_tags[i].empty())
                             ? record.gt_tags[i]
                             : model.vocab.objects()[std::min(
                                   record.gt->nodes[i].label_index,
                                   model.vocab.object_count() - 1)];
      r.score = 1.0;
      regions.push_back(std::move(r));
    }
  }

  ImageGraph out;
  out.image_id = record.image_id;
  const int n = static_cast<int>(regions.size());
  if (n < 2) return out;

  const auto scores = score_pairs(model, regions, record.width, record.height,
                                  opts);
  GraphDistributions dists = aggregate_scores(scores, n);
  if (opts.task == Task::predcls) {
    // Node labels pinned to the ground truth.
    for (int r = 0; r < n; ++r) {
      Vec one = Vec::Zero(model.config.n_obj_classes);
      one(record.gt->nodes[r].label_index) = 1.0;
      dists.node_probs[r] = std::move(one);
    }
  }
  if (opts.open_set) {
    dists = open_set_map(dists, model.vocab, *target_vocab, *lexicon,
                         opts.transfer);
  }
  std::vector<Box> boxes;
  boxes.reserve(regions.size());
  for (const Region& r : regions) boxes.push_back(r.box);
  out.graph = graph_from_distributions(dists, boxes);
  return out;
}

GraphSet infer_dataset(const model::Model& model, const Dataset& dataset,
                       const InferOptions& opts,
                       const Vocabulary* target_vocab,
                       const lex::ConceptLexicon* lexicon, int threads) {
  GraphSet out;
  out.images.resize(dataset.records.size());
  const int n_threads =
      std::max(1, std::min<int>(threads, static_cast<int>(dataset.records.size())));
  if (n_threads == 1) {
    for (size_t i = 0; i < dataset.records.size(); ++i) {
      out.images[i] = infer_record(model, dataset.records[i], opts,
                                   target_vocab, lexicon);
    }
    return out;
  }
  // Per-image work is pure; slots are indexed so the merge is order free.
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (size_t i = next.fetch_add(1); i < dataset.records.size();
             i = next.fetch_add(1)) {
          out.images[i] = infer_record(model, dataset.records[i], opts,
                                       target_vocab, lexicon);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_dot(const GraphSet& graphs, const Vocabulary& vocab,
               const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const ImageGraph& g : graphs.images) {
    std::string name = g.image_id;
    for (char& c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    std::ofstream out(std::filesystem::path(dir) / (name + ".dot"));
    out << "digraph \"" << g.image_id << "\" {\n";
    for (size_t i = 0; i < g.graph.nodes.size(); ++i) {
      const int li = g.graph.nodes[i].label_index;
      const std::string label =
          li < vocab.object_count() ? vocab.objects()[li] : "?";
      out << "  n" << i << " [label=\"" << label << "\"];\n";
    }
    for (const GraphEdge& e : g.graph.edges) {
      const std::string label = e.predicate < vocab.predicate_count()
                                    ? vocab.predicates()[e.predicate]
                                    : "?";
      out << "  n" << e.subject << " -> n" << e.object << " [label=\"" << label
          << "\"];\n";
    }
    out << "}\n";
  }
}

}  // namespace sgg::infer
