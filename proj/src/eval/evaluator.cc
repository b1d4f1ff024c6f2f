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

#include "eval/evaluator.h"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "core/geometry.h"

#include <json.hpp>

namespace sgg::eval {

const char* eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::sgdet:
      return "sgdet";
    case EvalMode::sgcls:
      return "sgcls";
    case EvalMode::predcls:
      return "predcls";
  }
  return "sgdet";
}

EvalMode eval_mode_from_name(const std::string& s) {
  if (s == "sgdet") return EvalMode::sgdet;
  if (s == "sgcls") return EvalMode::sgcls;
  if (s == "predcls") return EvalMode::predcls;
  throw SchemaError("unknown evaluation mode '" + s + "'");
}

void EvalConfig::validate() const {
  if (ks.empty()) throw SchemaError("eval config: need at least one K");
  for (size_t i = 0; i + 1 < ks.size(); ++i) {
    if (ks[i] >= ks[i + 1]) {
      throw SchemaError("eval config: K values must be ascending");
    }
  }
  if (ks.front() < 0) throw SchemaError("eval config: K must be nonnegative");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw SchemaError("eval config: iou threshold must be in (0,1]");
  }
}

bool match_triplet(const SceneGraph& pred, const GraphEdge& pe,
                   const SceneGraph& gt, const GraphEdge& ge, EvalMode mode,
                   double iou_threshold) {
  const GraphNode& ps = pred.nodes[pe.subject];
  const GraphNode& po = pred.nodes[pe.object];
  const GraphNode& gs = gt.nodes[ge.subject];
  const GraphNode& go = gt.nodes[ge.object];
  if (ps.label_index != gs.label_index || pe.predicate != ge.predicate ||
      po.label_index != go.label_index) {
    return false;
  }
  if (mode == EvalMode::sgdet) {
    return iou(ps.box, gs.box) >= iou_threshold &&
           iou(po.box, go.box) >= iou_threshold;
  }
  // Label-given modes run on the ground-truth boxes themselves.
  return ps.box == gs.box && po.box == go.box;
}

namespace {

std::vector<GraphEdge> sorted_edges(const SceneGraph& g) {
  std::vector<GraphEdge> edges = g.edges;
  std::sort(edges.begin(), edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.subject != b.subject) return a.subject < b.subject;
              return a.object < b.object;
            });
  return edges;
}

// Kuhn augmenting step: can pred p get a gt edge, stealing if needed?
bool try_assign(int p, const std::vector<std::vector<int>>& adj,
                std::vector<int>& gt_owner, std::vector<bool>& visited) {
  for (int g : adj[p]) {
    if (visited[g]) continue;
    visited[g] = true;
    if (gt_owner[g] < 0 || try_assign(gt_owner[g], adj, gt_owner, visited)) {
      gt_owner[g] = p;
      return true;
    }
  }
  return false;
}

}  // namespace

RecallResult recall_at_k(const SceneGraph& pred, const SceneGraph& gt, int k,
                         EvalMode mode, double iou_threshold) {
  RecallResult result;
  result.gt_count = static_cast<int>(gt.edges.size());
  result.gt_matched.assign(gt.edges.size(), false);
  if (k <= 0 || gt.edges.empty() || pred.edges.empty()) return result;

  const auto edges = sorted_edges(pred);
  const int top = std::min<int>(k, static_cast<int>(edges.size()));
  std::vector<std::vector<int>> adj(top);
  for (int p = 0; p < top; ++p) {
    for (int g = 0; g < static_cast<int>(gt.edges.size()); ++g) {
      if (match_triplet(pred, edges[p], gt, gt.edges[g], mode, iou_threshold)) {
        adj[p].push_back(g);
      }
    }
  }
  std::vector<int> gt_owner(gt.edges.size(), -1);
  for (int p = 0; p < top; ++p) {
    std::vector<bool> visited(gt.edges.size(), false);
    if (try_assign(p, adj, gt_owner, visited)) ++result.hits;
  }
  for (size_t g = 0; g < gt_owner.size(); ++g) {
    result.gt_matched[g] = gt_owner[g] >= 0;
  }
  return result;
}

EvalReport evaluate(const GraphSet& pred, const Dataset& gt,
                    const Vocabulary& vocab, const EvalConfig& cfg) {
  cfg.validate();

  std::unordered_map<std::string, const ImageRecord*> gt_by_id;
  for (const ImageRecord& rec : gt.records) {
    gt_by_id.emplace(rec.image_id, &rec);
  }
  std::vector<std::string> unmatched_pred, unmatched_gt;
  std::unordered_map<std::string, const ImageGraph*> pred_by_id;
  for (const ImageGraph& g : pred.images) {
    pred_by_id.emplace(g.image_id, &g);
    if (gt_by_id.find(g.image_id) == gt_by_id.end()) {
      unmatched_pred.push_back(g.image_id);
    }
  }
  for (const ImageRecord& rec : gt.records) {
    if (rec.gt && pred_by_id.find(rec.image_id) == pred_by_id.end()) {
      unmatched_gt.push_back(rec.image_id);
    }
  }
  if (!unmatched_pred.empty() || !unmatched_gt.empty()) {
    std::string msg = "evaluate: image id mismatch;";
    if (!unmatched_pred.empty()) {
      msg += " predictions without ground truth: ";
      for (const auto& id : unmatched_pred) msg += id + " ";
    }
    if (!unmatched_gt.empty()) {
      msg += " ground truth without predictions: ";
      for (const auto& id : unmatched_gt) msg += id + " ";
    }
    throw SchemaError(msg);
  }

  EvalReport report;
  report.mode = eval_mode_name(cfg.mode);
  report.micro = cfg.micro;
  report.ks = cfg.ks;
  const size_t nk = cfg.ks.size();

  std::vector<double> macro_sum(nk, 0.0);
  std::vector<long long> micro_hits(nk, 0);
  long long micro_total = 0;
  int images_with_gt = 0;
  // predicate class -> (gt_count, hits per K); ordered map keeps the report
  // independent of input order.
  std::map<int, std::pair<long long, std::vector<long long>>> per_class;

  // Sort by id so tallies never depend on file order.
  std::vector<const ImageGraph*> ordered;
  ordered.reserve(pred.images.size());
  for (const ImageGraph& g : pred.images) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(),
            [](const ImageGraph* a, const ImageGraph* b) {
              return a->image_id < b->image_id;
            });

  for (const ImageGraph* g : ordered) {
    const ImageRecord& rec = *gt_by_id.at(g->image_id);
    if (!rec.gt || rec.gt->edges.empty()) continue;
    ++images_with_gt;
    micro_total += static_cast<long long>(rec.gt->edges.size());
    for (const GraphEdge& e : rec.gt->edges) {
      auto& entry = per_class[e.predicate];
      if (entry.second.empty()) entry.second.assign(nk, 0);
      ++entry.first;
    }
    for (size_t ki = 0; ki < nk; ++ki) {
      const RecallResult rr =
          recall_at_k(g->graph, *rec.gt, cfg.ks[ki], cfg.mode, cfg.iou_threshold);
      macro_sum[ki] +=
          static_cast<double>(rr.hits) / static_cast<double>(rr.gt_count);
      micro_hits[ki] += rr.hits;
      for (size_t ge = 0; ge < rec.gt->edges.size(); ++ge) {
        if (rr.gt_matched[ge]) {
          ++per_class[rec.gt->edges[ge].predicate].second[ki];
        }
      }
    }
  }

  report.images = static_cast<int>(pred.images.size());
  report.images_with_gt = images_with_gt;
  report.recall.assign(nk, 0.0);
  report.mean_recall.assign(nk, 0.0);
  for (size_t ki = 0; ki < nk; ++ki) {
    if (cfg.micro) {
      report.recall[ki] = micro_total > 0 ? static_cast<double>(micro_hits[ki]) /
                                                static_cast<double>(micro_total)
                                          : 0.0;
    } else {
      report.recall[ki] =
          images_with_gt > 0 ? macro_sum[ki] / images_with_gt : 0.0;
    }
  }
  for (const auto& [predicate, entry] : per_class) {
    PredicateRow row;
    row.predicate = predicate;
    row.name = predicate < vocab.predicate_count() ? vocab.predicates()[predicate]
                                                   : "?";
    row.gt_count = entry.first;
    row.recall.assign(nk, 0.0);
    for (size_t ki = 0; ki < nk; ++ki) {
      row.recall[ki] =
          static_cast<double>(entry.second[ki]) / static_cast<double>(entry.first);
      report.mean_recall[ki] += row.recall[ki];
    }
    report.per_predicate.push_back(std::move(row));
  }
  if (!report.per_predicate.empty()) {
    for (size_t ki = 0; ki < nk; ++ki) {
      report.mean_recall[ki] /= static_cast<double>(report.per_predicate.size());
    }
  }
  std::sort(report.per_predicate.begin(), report.per_predicate.end(),
            [](const PredicateRow& a, const PredicateRow& b) {
              if (a.gt_count != b.gt_count) return a.gt_count > b.gt_count;
              return a.name < b.name;
            });
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mode"] = report.mode;
  j["aggregate"] = report.micro ? "micro" : "macro";
  j["images"] = report.images;
  j["images_with_gt"] = report.images_with_gt;
  j["k"] = report.ks;
  j["recall"] = report.recall;
  j["mean_recall"] = report.mean_recall;
  j["per_predicate"] = nlohmann::ordered_json::array();
  for (const PredicateRow& row : report.per_predicate) {
    nlohmann::ordered_json rj;
    rj["predicate"] = row.name;
    rj["gt_count"] = row.gt_count;
    rj["recall"] = row.recall;
    j["per_predicate"].push_back(std::move(rj));
  }
  return j.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  out << "mode: " << report.mode
      << "  aggregate: " << (report.micro ? "micro" : "macro")
      << "  images: " << report.images_with_gt << "/" << report.images << "\n";
  out << std::left << std::setw(24) << "metric";
  for (int k : report.ks) out << std::right << std::setw(10) << ("@" + std::to_string(k));
  out << "\n";
  auto line = [&](const std::string& name, const std::vector<double>& vals) {
    out << std::left << std::setw(24) << name;
    for (double v : vals) {
      out << std::right << std::setw(10) << std::fixed << std::setprecision(4)
          << v;
    }
    out << "\n";
  };
  line("R", report.recall);
  line("mR", report.mean_recall);
  for (const PredicateRow& row : report.per_predicate) {
    line("R[" + row.name + "] (" + std::to_string(row.gt_count) + ")",
         row.recall);
  }
  return out.str();
}

}  // namespace sgg::eval
