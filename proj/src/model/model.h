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
//
// Triplet labeling model: a pair of detected regions plus their context is
// embedded (visual features + box geometry + role type; word embeddings of
// the two detector tags around a MASK slot), run through a post-norm
// transformer encoder, and read out by three classification heads (subject,
// predicate, object). Forward in train mode records a ForwardTrace from
// which backward_pair produces exact gradients for every parameter.

#ifndef SGGKIT_MODEL_MODEL_H_
#define SGGKIT_MODEL_MODEL_H_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "core/rng.h"
#include "core/types.h"
#include "label/labeler.h"

namespace sgg::model {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Row = Eigen::RowVectorXd;

struct ModelConfig {
  int d = 768;
  int n_layers = 2;
  int n_heads = 12;
  int head_dim = 64;
  int mlp_dim = 3072;
  int d_vis = 1536;
  int d_word = 200;
  int word_vocab_size = 0;  // filled when the word table is built
  int n_obj_classes = 0;    // object categories + background
  int n_pred_classes = 0;   // predicate categories + background
  double dropout_p = 0.1;
  double ln_eps = 1e-5;
  bool train_word_embeddings = true;

  void validate() const;
};

struct LayerNormParams {
  Mat gain;  // 1 x d
  Mat bias;  // 1 x d
};

struct AttentionParams {
  Mat w_q, w_k, w_v, w_o;  // d x d
  Mat b_q, b_k, b_v, b_o;  // 1 x d
};

struct MlpParams {
  Mat w1, b1;  // in x hidden, 1 x hidden
  Mat w2, b2;  // hidden x out, 1 x out
};

struct EncoderLayerParams {
  AttentionParams attn;
  LayerNormParams ln_attn;
  MlpParams mlp;
  LayerNormParams ln_mlp;
};

struct ModelParams {
  // Visual embedder.
  Mat w_r, b_r;  // d_vis x d
  LayerNormParams ln_region;
  Mat w_p, b_p;  // 7 x d
  LayerNormParams ln_geometry;
  Mat type_emb;  // 3 x d: subject, object, context
  LayerNormParams ln_visual;
  // Textual embedder.
  Mat word_emb;  // word_vocab_size x d_word
  Mat w_e, b_e;  // d_word x d
  Mat pos_emb;   // 4 x d
  LayerNormParams ln_text;
  // Encoder.
  std::vector<EncoderLayerParams> layers;
  // Heads.
  Mat w_word, b_word;  // d_word x d, shared subject/object word fusion
  MlpParams object_head;
  Mat w_ts, b_ts, w_to, b_to, w_vs, b_vs, w_vo, b_vo;  // d x d predicate fusion
  MlpParams predicate_head;

  // Visits every tensor in a fixed order under a stable name; the order
  // defines the checkpoint layout and the SGD update sequence.
  template <typename Self, typename Fn>
  static void visit(Self& p, Fn&& fn) {
    fn("visual.region_proj.weight", p.w_r);
    fn("visual.region_proj.bias", p.b_r);
    fn("visual.region_norm.gain", p.ln_region.gain);
    fn("visual.region_norm.bias", p.ln_region.bias);
    fn("visual.geometry_proj.weight", p.w_p);
    fn("visual.geometry_proj.bias", p.b_p);
    fn("visual.geometry_norm.gain", p.ln_geometry.gain);
    fn("visual.geometry_norm.bias", p.ln_geometry.bias);
    fn("visual.type_embedding", p.type_emb);
    fn("visual.out_norm.gain", p.ln_visual.gain);
    fn("visual.out_norm.bias", p.ln_visual.bias);
    fn("text.word_embedding", p.word_emb);
    fn("text.word_proj.weight", p.w_e);
    fn("text.word_proj.bias", p.b_e);
    fn("text.position_embedding", p.pos_emb);
    fn("text.norm.gain", p.ln_text.gain);
    fn("text.norm.bias", p.ln_text.bias);
    for (size_t i = 0; i < p.layers.size(); ++i) {
      auto& layer = p.layers[i];
      const std::string prefix = "encoder." + std::to_string(i) + ".";
      fn(prefix + "attn.query.weight", layer.attn.w_q);
      fn(prefix + "attn.query.bias", layer.attn.b_q);
      fn(prefix + "attn.key.weight", layer.attn.w_k);
      fn(prefix + "attn.key.bias", layer.attn.b_k);
      fn(prefix + "attn.value.weight", layer.attn.w_v);
      fn(prefix + "attn.value.bias", layer.attn.b_v);
      fn(prefix + "attn.out.weight", layer.attn.w_o);
      fn(prefix + "attn.out.bias", layer.attn.b_o);
      fn(prefix + "attn_norm.gain", layer.ln_attn.gain);
      fn(prefix + "attn_norm.bias", layer.ln_attn.bias);
      fn(prefix + "mlp.fc1.weight", layer.mlp.w1);
      fn(prefix + "mlp.fc1.bias", layer.mlp.b1);
      fn(prefix + "mlp.fc2.weight", layer.mlp.w2);
      fn(prefix + "mlp.fc2.bias", layer.mlp.b2);
      fn(prefix + "mlp_norm.gain", layer.ln_mlp.gain);
      fn(prefix + "mlp_norm.bias", layer.ln_mlp.bias);
    }
    fn("heads.word_fusion.weight", p.w_word);
    fn("heads.word_fusion.bias", p.b_word);
    fn("heads.object.fc1.weight", p.object_head.w1);
    fn("heads.object.fc1.bias", p.object_head.b1);
    fn("heads.object.fc2.weight", p.object_head.w2);
    fn("heads.object.fc2.bias", p.object_head.b2);
    fn("heads.text_subject.weight", p.w_ts);
    fn("heads.text_subject.bias", p.b_ts);
    fn("heads.text_object.weight", p.w_to);
    fn("heads.text_object.bias", p.b_to);
    fn("heads.visual_subject.weight", p.w_vs);
    fn("heads.visual_subject.bias", p.b_vs);
    fn("heads.visual_object.weight", p.w_vo);
    fn("heads.visual_object.bias", p.b_vo);
    fn("heads.predicate.fc1.weight", p.predicate_head.w1);
    fn("heads.predicate.fc1.bias", p.predicate_head.b1);
    fn("heads.predicate.fc2.weight", p.predicate_head.w2);
    fn("heads.predicate.fc2.bias", p.predicate_head.b2);
  }
};

struct TensorRef {
  std::string name;
  Mat* tensor;
};

std::vector<TensorRef> registry(ModelParams& p);

// Allocates the parameter set for a config; seeded init (LN gain 1 / bias 0,
// weights uniform scaled by 1/sqrt(fan_in), embeddings normal(0, 0.02)).
ModelParams init_params(const ModelConfig& cfg, uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

// Word table special rows.
inline constexpr int kMaskWord = 0;
inline constexpr int kSepWord = 1;
inline constexpr int kOovWord = 2;
inline constexpr const char* kMaskToken = "[MASK]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kOovToken = "[OOV]";

struct Model {
  ModelConfig config;
  ModelParams params;
  std::vector<std::string> words;  // [MASK], [SEP], [OOV], detector tags...
  std::unordered_map<std::string, int> word_index;
  Vocabulary vocab;
  uint64_t init_seed = 0;

  int word_id(const std::string& tag) const;  // OOV row for unknown tags
};

// tag_words: detector vocabulary (deduplicated, sorted by the caller or
// not — this sorts). pretrained maps word -> d_word vector; listed words get
// those rows, everything else keeps its random init.
Model build_model(
    ModelConfig cfg, const Vocabulary& vocab,
    std::vector<std::string> tag_words, uint64_t seed,
    const std::map<std::string, std::vector<double>>* pretrained = nullptr);

std::vector<std::string> collect_tag_words(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct PairInput {
  Mat features;  // N x d_vis
  Mat geometry;  // N x 7 (normalized box geometry)
  int subject = 0;
  int object = 1;
  int subject_word = kOovWord;
  int object_word = kOovWord;
  // Input-ablation hooks: replace the tag word vectors (1 x d_word).
  std::optional<Row> subject_word_override;
  std::optional<Row> object_word_override;
};

struct PairLabels {
  int subject = 0;
  int predicate = 0;
  int object = 0;
};

struct HeadProbs {
  Vec subject;    // n_obj_classes, sums to 1
  Vec predicate;  // n_pred_classes
  Vec object;     // n_obj_classes
};

struct VisualTrace {
  Mat region_proj;  // N x d, pre region_norm
  Mat geom_proj;    // N x d, pre geometry_norm
  Mat pre_norm;     // N x d, pre out_norm
  Mat dropmask;     // empty in eval mode
};

struct TextualTrace {
  Mat pre_norm;  // 4 x d
  Mat dropmask;
};

struct LayerTrace {
  Mat x_in;                // T x d
  Mat q, k, v;             // T x d
  std::vector<Mat> attn;   // per head, T x T row-stochastic
  Mat heads_concat;        // T x d, pre out projection
  Mat attn_dropmask;       // T x d
  Mat resid1;              // T x d, pre attn_norm
  Mat x_mid;               // T x d, post attn_norm
  Mat mlp_pre;             // T x mlp_dim, pre GELU
  Mat mlp_act;             // T x mlp_dim, post GELU
  Mat mlp_dropmask;        // T x d
  Mat resid2;              // T x d, pre mlp_norm
};

struct HeadTrace {
  Row s_in, o_in, p_in;              // fused head inputs
  Row s_hidden, o_hidden, p_hidden;  // pre-ReLU
};

struct ForwardTrace {
  VisualTrace visual;
  TextualTrace textual;
  Mat word_vecs;  // 4 x d_word textual input vectors
  Mat x0;         // T x d encoder input
  std::vector<LayerTrace> layers;
  Mat encoder_out;  // T x d
  HeadTrace heads;
  HeadProbs probs;
  std::vector<int> roles;
  bool subject_word_from_table = true;
  bool object_word_from_table = true;
  bool train = false;
};

// Component forwards; pass a trace/rng only in train mode.
Mat visual_embed(const ModelConfig& cfg, const ModelParams& p,
                 const Mat& features, const Mat& geometry,
                 const std::vector<int>& roles, VisualTrace* trace = nullptr,
                 Rng* dropout = nullptr);

Mat textual_embed(const ModelConfig& cfg, const ModelParams& p,
                  const Mat& word_vecs, TextualTrace* trace = nullptr,
                  Rng* dropout = nullptr);

Mat encoder_forward(const ModelConfig& cfg, const ModelParams& p,
                    const Mat& tokens, std::vector<LayerTrace>* trace = nullptr,
                    Rng* dropout = nullptr);

HeadProbs classify(const ModelConfig& cfg, const ModelParams& p, const Row& vk,
                   const Row& vl, const Row& tk, const Row& tp, const Row& tl,
                   const Row& word_k, const Row& word_l,
                   HeadTrace* trace = nullptr);

// Full pair forward. Train mode applies seeded dropout and, when trace is
// given, records everything backward_pair needs.
HeadProbs forward_pair(const Model& model, const PairInput& in, bool train,
                       uint64_t dropout_seed, ForwardTrace* trace = nullptr);

// Assembles model inputs for one region pair: feature matrix, normalized box
// geometry and tag word ids.
PairInput make_pair_input(const Model& model, const std::vector<Region>& regions,
                          double width, double height, int subject, int object);

struct Lambdas {
  double subject = 0.5;
  double predicate = 1.0;
  double object = 0.5;
};

struct LossBreakdown {
  double subject = 0.0;
  double predicate = 0.0;
  double object = 0.0;
  double total = 0.0;
};

LossBreakdown pair_loss(const HeadProbs& probs, const PairLabels& labels,
                        const label::LossWeights& weights,
                        const Lambdas& lambdas);

// Accumulates exact gradients of pair_loss into grads (same shape as the
// model parameters, see zeros_like).
void backward_pair(const Model& model, const PairInput& in,
                   const ForwardTrace& trace, const PairLabels& labels,
                   const label::LossWeights& weights, const Lambdas& lambdas,
                   ModelParams& grads);

// Row-wise layer norm helpers, shared with tests.
Mat layer_norm(const Mat& x, const LayerNormParams& ln, double eps);
Mat layer_norm_backward(const Mat& x, const LayerNormParams& ln, double eps,
                        const Mat& dy, Mat& dgain, Mat& dbias);

double gelu(double x);
double gelu_grad(double x);

}  // namespace sgg::model

#endif  // SGGKIT_MODEL_MODEL_H_
