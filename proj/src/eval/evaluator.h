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

#ifndef SGGKIT_EVAL_EVALUATOR_H_
#define SGGKIT_EVAL_EVALUATOR_H_

#include <string>
#include <vector>

#include "core/dataset.h"

namespace sgg::eval {

enum class EvalMode { sgdet, sgcls, predcls };

const char* eval_mode_name(EvalMode m);
EvalMode eval_mode_from_name(const std::string& s);

struct EvalConfig {
  EvalMode mode = EvalMode::sgdet;
  std::vector<int> ks = {20, 50, 100};  // ascending
  double iou_threshold = 0.5;
  // micro pools hits/totals over the dataset instead of averaging per-image
  // recalls.
  bool micro = false;

  void validate() const;
};

// Labels must agree on subject/predicate/object; boxes match with IoU >= the
// threshold in sgdet and exactly in the label-given modes.
bool match_triplet(const SceneGraph& pred, const GraphEdge& pred_edge,
                   const SceneGraph& gt, const GraphEdge& gt_edge,
                   EvalMode mode, double iou_threshold);

struct RecallResult {
  int hits = 0;
  int gt_count = 0;
  std::vector<bool> gt_matched;  // per gt edge
};

// One-to-one matching of the top-K predictions (score order, ties broken by
// subject then object index) against ground-truth edges. Each prediction is
// matched greedily in order; assignments are revised via augmenting paths so
// the final hit count always equals the maximum bipartite matching.
RecallResult recall_at_k(const SceneGraph& pred, const SceneGraph& gt, int k,
                         EvalMode mode, double iou_threshold);

struct PredicateRow {
  int predicate = 0;
  std::string name;
  long long gt_count = 0;
  std::vector<double> recall;  // per K
};

struct EvalReport {
  std::string mode;
  bool micro = false;
  std::vector<int> ks;
  std::vector<double> recall;       // R@K
  std::vector<double> mean_recall;  // mR@K
  std::vector<PredicateRow> per_predicate;
  int images = 0;
  int images_with_gt = 0;
};

EvalReport evaluate(const GraphSet& pred, const Dataset& gt,
                    const Vocabulary& vocab, const EvalConfig& cfg);

std::string report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace sgg::eval

#endif  // SGGKIT_EVAL_EVALUATOR_H_
