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

#ifndef SGGKIT_INFER_INFERENCE_H_
#define SGGKIT_INFER_INFERENCE_H_

#include <tuple>
#include <vector>

#include "core/dataset.h"
#include "lexicon/lexicon.h"
#include "model/model.h"

namespace sgg::infer {

using model::Mat;
using model::Vec;

// sgdet scores detector regions; sgcls/predcls run on ground-truth boxes
// (features required in the dataset), predcls additionally pins node labels
// to the ground truth and only predicts predicates.
enum class Task { sgdet, sgcls, predcls };
enum class Ablation { none, text, visual };
enum class Transfer { sum, max };

struct InferOptions {
  Task task = Task::sgdet;
  Ablation ablate = Ablation::none;
  uint64_t seed = 0;
  int top_regions = 36;  // keep the highest-scoring detections per image
  bool open_set = false;
  Transfer transfer = Transfer::sum;
};

struct PairScores {
  int subject_region = 0;
  int object_region = 0;
  Vec subject_probs;
  Vec predicate_probs;
  Vec object_probs;
};

// One eval-mode forward per ordered region pair (k,l), k != l. Ablations
// rewrite the inputs: text replaces the tag word vectors with one seeded
// random vector, visual replaces every region feature with the image mean.
std::vector<PairScores> score_pairs(const model::Model& model,
                                    const std::vector<Region>& regions,
                                    double width, double height,
                                    const InferOptions& opts);

struct GraphDistributions {
  std::vector<Vec> node_probs;  // per region, mean of its pair votes
  std::vector<std::tuple<int, int, Vec>> pair_predicates;
};

GraphDistributions aggregate_scores(const std::vector<PairScores>& scores,
                                    int n_regions);

// Argmax labels + graph-constraint edges. A node with zero probability mass
// is removed together with its edges; a pair whose predicate argmax is
// background yields no edge. Edge score is the product of the three label
// probabilities; edges sort by score then (subject, object).
SceneGraph graph_from_distributions(const GraphDistributions& dists,
                                    const std::vector<Box>& boxes);

SceneGraph aggregate_graph(const std::vector<PairScores>& scores,
                           const std::vector<Region>& regions);

// Moves probability mass from source categories onto every matching target
// category (background passes through); unmatched mass drops.
GraphDistributions open_set_map(const GraphDistributions& dists,
                                const Vocabulary& source,
                                const Vocabulary& target,
                                const lex::ConceptLexicon& lexicon,
                                Transfer transfer);

// Full per-record inference; target_vocab/lexicon required in open-set mode.
ImageGraph infer_record(const model::Model& model, const ImageRecord& record,
                        const InferOptions& opts,
                        const Vocabulary* target_vocab = nullptr,
                        const lex::ConceptLexicon* lexicon = nullptr);

GraphSet infer_dataset(const model::Model& model, const Dataset& dataset,
                       const InferOptions& opts,
                       const Vocabulary* target_vocab = nullptr,
                       const lex::ConceptLexicon* lexicon = nullptr,
                       int threads = 1);

// One Graphviz file per image under dir.
void write_dot(const GraphSet& graphs, const Vocabulary& vocab,
               const std::string& dir);

}  // namespace sgg::infer

#endif  // SGGKIT_INFER_INFERENCE_H_
