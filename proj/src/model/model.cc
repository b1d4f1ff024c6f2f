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

#include "model/model.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/geometry.h"

namespace sgg::model {

namespace {

constexpr double kProbFloor = 1e-12;

void softmax_rows_inplace(Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

Vec softmax_row(const Row& logits) {
  Row m = logits;
  const double mx = m.maxCoeff();
  m = (m.array() - mx).exp();
  m /= m.sum();
  return m.transpose();
}

// Entries are 0 or 1/(1-p); drawn row-major for determinism.
Mat dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double p) {
  Mat m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = rng.uniform() >= p ? keep_scale : 0.0;
    }
  }
  return m;
}

Mat column_sums(const Mat& m) {
  return m.colwise().sum();  // 1 x cols
}

void check_finite(const Mat& m, const std::string& where) {
  if (!m.allFinite()) {
    throw NumericError("non-finite activations in " + where);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (d <= 0 || n_layers <= 0 || n_heads <= 0 || head_dim <= 0 ||
      mlp_dim <= 0 || d_vis <= 0 || d_word <= 0 || word_vocab_size <= 0 ||
      n_obj_classes <= 1 || n_pred_classes <= 1) {
    throw SchemaError("model config: all dimensions must be positive");
  }
  if (n_heads * head_dim != d) {
    throw SchemaError("model config: n_heads * head_dim must equal d");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw SchemaError("model config: dropout_p must be in [0,1)");
  }
}

std::vector<TensorRef> registry(ModelParams& p) {
  std::vector<TensorRef> refs;
  ModelParams::visit(p, [&refs](const std::string& name, Mat& m) {
    refs.push_back({name, &m});
  });
  return refs;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

namespace {

void allocate(const ModelConfig& cfg, ModelParams& p) {
  const int d = cfg.d;
  auto ln = [d](LayerNormParams& n) {
    n.gain = Mat(1, d);
    n.bias = Mat(1, d);
  };
  p.w_r = Mat(cfg.d_vis, d);
  p.b_r = Mat(1, d);
  ln(p.ln_region);
  p.w_p = Mat(7, d);
  p.b_p = Mat(1, d);
  ln(p.ln_geometry);
  p.type_emb = Mat(3, d);
  ln(p.ln_visual);
  p.word_emb = Mat(cfg.word_vocab_size, cfg.d_word);
  p.w_e = Mat(cfg.d_word, d);
  p.b_e = Mat(1, d);
  p.pos_emb = Mat(4, d);
  ln(p.ln_text);
  p.layers.resize(cfg.n_layers);
  for (auto& layer : p.layers) {
    layer.attn.w_q = Mat(d, d);
    layer.attn.w_k = Mat(d, d);
    layer.attn.w_v = Mat(d, d);
    layer.attn.w_o = Mat(d, d);
    layer.attn.b_q = Mat(1, d);
    layer.attn.b_k = Mat(1, d);
    layer.attn.b_v = Mat(1, d);
    layer.attn.b_o = Mat(1, d);
    ln(layer.ln_attn);
    layer.mlp.w1 = Mat(d, cfg.mlp_dim);
    layer.mlp.b1 = Mat(1, cfg.mlp_dim);
    layer.mlp.w2 = Mat(cfg.mlp_dim, d);
    layer.mlp.b2 = Mat(1, d);
    ln(layer.ln_mlp);
  }
  p.w_word = Mat(cfg.d_word, d);
  p.b_word = Mat(1, d);
  p.object_head.w1 = Mat(d, d);
  p.object_head.b1 = Mat(1, d);
  p.object_head.w2 = Mat(d, cfg.n_obj_classes);
  p.object_head.b2 = Mat(1, cfg.n_obj_classes);
  p.w_ts = Mat(d, d);
  p.b_ts = Mat(1, d);
  p.w_to = Mat(d, d);
  p.b_to = Mat(1, d);
  p.w_vs = Mat(d, d);
  p.b_vs = Mat(1, d);
  p.w_vo = Mat(d, d);
  p.b_vo = Mat(1, d);
  p.predicate_head.w1 = Mat(d, d);
  p.predicate_head.b1 = Mat(1, d);
  p.predicate_head.w2 = Mat(d, cfg.n_pred_classes);
  p.predicate_head.b2 = Mat(1, cfg.n_pred_classes);
}

bool name_ends_with(const std::string& name, const char* suffix) {
  const std::string_view sv(suffix);
  return name.size() >= sv.size() &&
         name.compare(name.size() - sv.size(), sv.size(), sv) == 0;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParams p;
  allocate(cfg, p);
  // Every tensor draws from its own stream keyed by name, so the init of one
  // tensor never shifts another's.
  ModelParams::visit(p, [&](const std::string& name, Mat& m) {
    Rng rng(mix_seed(seed, fnv1a64(name)));
    if (name_ends_with(name, "norm.gain")) {
      m.setOnes();
    } else if (name_ends_with(name, ".bias")) {
      m.setZero();
    } else if (name.find("embedding") != std::string::npos) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          m(r, c) = 0.02 * rng.normal();
        }
      }
    } else {
      const double s = 1.0 / std::sqrt(static_cast<double>(m.rows()));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          m(r, c) = rng.uniform(-s, s);
        }
      }
    }
  });
  return p;
}

ModelParams zeros_like(const ModelParams& src) {
  ModelParams p = src;
  ModelParams::visit(p, [](const std::string&, Mat& m) { m.setZero(); });
  return p;
}

int Model::word_id(const std::string& tag) const {
  auto it = word_index.find(tag);
  return it == word_index.end() ? kOovWord : it->second;
}

std::vector<std::string> collect_tag_words(const Dataset& dataset) {
  std::set<std::string> tags;
  for (const ImageRecord& rec : dataset.records) {
    for (const Region& r : rec.regions) tags.insert(r.detector_label);
    for (const std::string& t : rec.gt_tags) {
      if (!t.empty()) tags.insert(t);
    }
  }
  return {tags.begin(), tags.end()};
}

Model build_model(ModelConfig cfg, const Vocabulary& vocab,
                  std::vector<std::string> tag_words, uint64_t seed,
                  const std::map<std::string, std::vector<double>>* pretrained) {
  Model m;
  std::sort(tag_words.begin(), tag_words.end());
  tag_words.erase(std::unique(tag_words.begin(), tag_words.end()),
                  tag_words.end());
  m.words = {kMaskToken, kSepToken, kOovToken};
  m.words.insert(m.words.end(), tag_words.begin(), tag_words.end());
  cfg.word_vocab_size = static_cast<int>(m.words.size());
  cfg.n_obj_classes = vocab.object_count();
  cfg.n_pred_classes = vocab.predicate_count();
  cfg.validate();
  m.config = cfg;
  m.vocab = vocab;
  m.init_seed = seed;
  m.params = init_params(cfg, seed);
  for (int i = 0; i < static_cast<int>(m.words.size()); ++i) {
    m.word_index.emplace(m.words[i], i);
  }
  if (pretrained != nullptr) {
    for (int i = 0; i < static_cast<int>(m.words.size()); ++i) {
      auto it = pretrained->find(m.words[i]);
      if (it == pretrained->end()) continue;
      if (static_cast<int>(it->second.size()) != cfg.d_word) {
        throw SchemaError("embedding table: vector length mismatch for '" +
                          m.words[i] + "'");
      }
      for (int c = 0; c < cfg.d_word; ++c) {
        m.params.word_emb(i, c) = it->second[c];
      }
    }
  }
  return m;
}

Mat visual_embed(const ModelConfig& cfg, const ModelParams& p,
                 const Mat& features, const Mat& geometry,
                 const std::vector<int>& roles, VisualTrace* trace,
                 Rng* dropout) {
  if (features.cols() != cfg.d_vis) {
    throw SchemaError("visual_embed: feature length " +
                      std::to_string(features.cols()) + " != configured " +
                      std::to_string(cfg.d_vis));
  }
  const Eigen::Index n = features.rows();
  if (geometry.rows() != n || static_cast<Eigen::Index>(roles.size()) != n) {
    throw SchemaError("visual_embed: inconsistent region count");
  }
  Mat region_proj = features * p.w_r;
  region_proj.rowwise() += p.b_r.row(0);
  Mat geom_proj = geometry * p.w_p;
  geom_proj.rowwise() += p.b_p.row(0);
  Mat pre_norm = layer_norm(region_proj, p.ln_region, cfg.ln_eps) +
                 layer_norm(geom_proj, p.ln_geometry, cfg.ln_eps);
  for (Eigen::Index i = 0; i < n; ++i) {
    pre_norm.row(i) += p.type_emb.row(roles[i]);
  }
  Mat out = layer_norm(pre_norm, p.ln_visual, cfg.ln_eps);
  Mat mask;
  if (dropout != nullptr && cfg.dropout_p > 0.0) {
    mask = dropout_mask(*dropout, n, cfg.d, cfg.dropout_p);
    out = out.cwiseProduct(mask);
  }
  if (trace != nullptr) {
    trace->region_proj = std::move(region_proj);
    trace->geom_proj = std::move(geom_proj);
    trace->pre_norm = std::move(pre_norm);
    trace->dropmask = std::move(mask);
  }
  return out;
}

Mat textual_embed(const ModelConfig& cfg, const ModelParams& p,
                  const Mat& word_vecs, TextualTrace* trace, Rng* dropout) {
  if (word_vecs.rows() != 4 || word_vecs.cols() != cfg.d_word) {
    throw SchemaError("textual_embed: expected 4 x d_word word vectors");
  }
  Mat pre_norm = word_vecs * p.w_e;
  pre_norm.rowwise() += p.b_e.row(0);
  pre_norm += p.pos_emb;
  Mat out = layer_norm(pre_norm, p.ln_text, cfg.ln_eps);
  Mat mask;
  if (dropout != nullptr && cfg.dropout_p > 0.0) {
    mask = dropout_mask(*dropout, 4, cfg.d, cfg.dropout_p);
    out = out.cwiseProduct(mask);
  }
  if (trace != nullptr) {
    trace->pre_norm = std::move(pre_norm);
    trace->dropmask = std::move(mask);
  }
  return out;
}

Mat encoder_forward(const ModelConfig& cfg, const ModelParams& p,
                    const Mat& tokens, std::vector<LayerTrace>* trace,
                    Rng* dropout) {
  const Eigen::Index t = tokens.rows();
  const int hd = cfg.head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Mat x = tokens;
  if (trace != nullptr) trace->resize(p.layers.size());
  for (size_t li = 0; li < p.layers.size(); ++li) {
    const EncoderLayerParams& layer = p.layers[li];
    LayerTrace* lt = trace != nullptr ? &(*trace)[li] : nullptr;

    Mat q = x * layer.attn.w_q;
    q.rowwise() += layer.attn.b_q.row(0);
    Mat k = x * layer.attn.w_k;
    k.rowwise() += layer.attn.b_k.row(0);
    Mat v = x * layer.attn.w_v;
    v.rowwise() += layer.attn.b_v.row(0);

    Mat concat(t, cfg.d);
    std::vector<Mat> attn_probs;
    if (lt != nullptr) attn_probs.reserve(cfg.n_heads);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto qh = q.middleCols(h * hd, hd);
      const auto kh = k.middleCols(h * hd, hd);
      const auto vh = v.middleCols(h * hd, hd);
      Mat scores = qh * kh.transpose() * scale;
      softmax_rows_inplace(scores);
      concat.middleCols(h * hd, hd) = scores * vh;
      if (lt != nullptr) attn_probs.push_back(std::move(scores));
    }
    Mat attn_out = concat * layer.attn.w_o;
    attn_out.rowwise() += layer.attn.b_o.row(0);
    Mat attn_mask;
    if (dropout != nullptr && cfg.dropout_p > 0.0) {
      attn_mask = dropout_mask(*dropout, t, cfg.d, cfg.dropout_p);
      attn_out = attn_out.cwiseProduct(attn_mask);
    }
    Mat resid1 = x + attn_out;
    Mat x_mid = layer_norm(resid1, layer.ln_attn, cfg.ln_eps);

    Mat mlp_pre = x_mid * layer.mlp.w1;
    mlp_pre.rowwise() += layer.mlp.b1.row(0);
    Mat mlp_act = mlp_pre.unaryExpr([](double v) { return gelu(v); });
    Mat mlp_out = mlp_act * layer.mlp.w2;
    mlp_out.rowwise() += layer.mlp.b2.row(0);
    Mat mlp_mask;
    if (dropout != nullptr && cfg.dropout_p > 0.0) {
      mlp_mask = dropout_mask(*dropout, t, cfg.d, cfg.dropout_p);
      mlp_out = mlp_out.cwiseProduct(mlp_mask);
    }
    Mat resid2 = x_mid + mlp_out;
    Mat x_out = layer_norm(resid2, layer.ln_mlp, cfg.ln_eps);
    check_finite(x_out, "encoder layer " + std::to_string(li));

    if (lt != nullptr) {
      lt->x_in = std::move(x);
      lt->q = std::move(q);
      lt->k = std::move(k);
      lt->v = std::move(v);
      lt->attn = std::move(attn_probs);
      lt->heads_concat = std::move(concat);
      lt->attn_dropmask = std::move(attn_mask);
      lt->resid1 = std::move(resid1);
      lt->x_mid = std::move(x_mid);
      lt->mlp_pre = std::move(mlp_pre);
      lt->mlp_act = std::move(mlp_act);
      lt->mlp_dropmask = std::move(mlp_mask);
      lt->resid2 = std::move(resid2);
    }
    x = std::move(x_out);
  }
  return x;
}

HeadProbs classify(const ModelConfig& cfg, const ModelParams& p, const Row& vk,
                   const Row& vl, const Row& tk, const Row& tp, const Row& tl,
                   const Row& word_k, const Row& word_l, HeadTrace* trace) {
  Row s_in = vk + word_k * p.w_word + p.b_word.row(0);
  Row o_in = vl + word_l * p.w_word + p.b_word.row(0);
  Row p_in = tp + tk * p.w_ts + p.b_ts.row(0) + tl * p.w_to + p.b_to.row(0) +
             vk * p.w_vs + p.b_vs.row(0) + vl * p.w_vo + p.b_vo.row(0);

  auto head = [](const MlpParams& h, const Row& in, Row* hidden_out) {
    Row hidden = in * h.w1 + h.b1.row(0);
    if (hidden_out != nullptr) *hidden_out = hidden;
    Row act = hidden.cwiseMax(0.0);
    Row logits = act * h.w2 + h.b2.row(0);
    return softmax_row(logits);
  };

  HeadProbs probs;
  Row s_hidden, o_hidden, p_hidden;
  probs.subject = head(p.object_head, s_in, &s_hidden);
  probs.object = head(p.object_head, o_in, &o_hidden);
  probs.predicate = head(p.predicate_head, p_in, &p_hidden);
  if (trace != nullptr) {
    trace->s_in = std::move(s_in);
    trace->o_in = std::move(o_in);
    trace->p_in = std::move(p_in);
    trace->s_hidden = std::move(s_hidden);
    trace->o_hidden = std::move(o_hidden);
    trace->p_hidden = std::move(p_hidden);
  }
  return probs;
}

HeadProbs forward_pair(const Model& model, const PairInput& in, bool train,
                       uint64_t dropout_seed, ForwardTrace* trace) {
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  const Eigen::Index n = in.features.rows();
  if (n < 2) throw SchemaError("forward_pair: need at least two regions");
  if (in.subject == in.object || in.subject < 0 || in.object < 0 ||
      in.subject >= n || in.object >= n) {
    throw SchemaError("forward_pair: invalid subject/object indices");
  }
  std::vector<int> roles(n, 2);
  roles[in.subject] = 0;
  roles[in.object] = 1;

  Rng drop_rng(dropout_seed);
  Rng* dropout = train && cfg.dropout_p > 0.0 ? &drop_rng : nullptr;

  VisualTrace* vt = trace != nullptr ? &trace->visual : nullptr;
  Mat vis = visual_embed(cfg, p, in.features, in.geometry, roles, vt, dropout);

  Mat word_vecs(4, cfg.d_word);
  word_vecs.row(0) = in.subject_word_override
                         ? *in.subject_word_override
                         : Row(p.word_emb.row(in.subject_word));
  word_vecs.row(1) = p.word_emb.row(kMaskWord);
  word_vecs.row(2) = in.object_word_override
                         ? *in.object_word_override
                         : Row(p.word_emb.row(in.object_word));
  word_vecs.row(3) = p.word_emb.row(kSepWord);

  TextualTrace* tt = trace != nullptr ? &trace->textual : nullptr;
  Mat txt = textual_embed(cfg, p, word_vecs, tt, dropout);

  Mat x0(n + 4, cfg.d);
  x0.topRows(n) = vis;
  x0.bottomRows(4) = txt;

  std::vector<LayerTrace>* lt = trace != nullptr ? &trace->layers : nullptr;
  Mat out = encoder_forward(cfg, p, x0, lt, dropout);

  const Row vk = out.row(in.subject);
  const Row vl = out.row(in.object);
  const Row tk = out.row(n);
  const Row tp = out.row(n + 1);
  const Row tl = out.row(n + 2);
  HeadTrace* ht = trace != nullptr ? &trace->heads : nullptr;
  HeadProbs probs = classify(cfg, p, vk, vl, tk, tp, tl, word_vecs.row(0),
                             word_vecs.row(2), ht);
  if (trace != nullptr) {
    trace->word_vecs = std::move(word_vecs);
    trace->x0 = std::move(x0);
    trace->encoder_out = std::move(out);
    trace->probs = probs;
    trace->roles = std::move(roles);
    trace->subject_word_from_table = !in.subject_word_override.has_value();
    trace->object_word_from_table = !in.object_word_override.has_value();
    trace->train = train;
  }
  return probs;
}

PairInput make_pair_input(const Model& model,
                          const std::vector<Region>& regions, double width,
                          double height, int subject, int object) {
  const int n = static_cast<int>(regions.size());
  PairInput in;
  in.features = Mat(n, model.config.d_vis);
  in.geometry = Mat(n, 7);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(regions[i].feature.size()) != model.config.d_vis) {
      throw SchemaError("make_pair_input: region feature length " +
                        std::to_string(regions[i].feature.size()) +
                        " != model d_vis " + std::to_string(model.config.d_vis));
    }
    for (int c = 0; c < model.config.d_vis; ++c) {
      in.features(i, c) = regions[i].feature[c];
    }
    const BoxGeometry g = box_geometry(regions[i].box, width, height);
    for (int c = 0; c < 7; ++c) in.geometry(i, c) = g[c];
  }
  in.subject = subject;
  in.object = object;
  in.subject_word = model.word_id(regions[subject].detector_label);
  in.object_word = model.word_id(regions[object].detector_label);
  return in;
}

LossBreakdown pair_loss(const HeadProbs& probs, const PairLabels& labels,
                        const label::LossWeights& weights,
                        const Lambdas& lambdas) {
  auto ce = [](const Vec& p, int label) {
    return -std::log(std::max(p(label), kProbFloor));
  };
  LossBreakdown out;
  out.subject = weights.object_weights[labels.subject] *
                ce(probs.subject, labels.subject);
  out.predicate = weights.predicate_weights[labels.predicate] *
                  ce(probs.predicate, labels.predicate);
  out.object =
      weights.object_weights[labels.object] * ce(probs.object, labels.object);
  out.total = lambdas.subject * out.subject + lambdas.predicate * out.predicate +
              lambdas.object * out.object;
  return out;
}

Mat layer_norm(const Mat& x, const LayerNormParams& ln, double eps) {
  Mat out(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + eps);
    out.row(r) = ((x.row(r).array() - mean) * inv) * ln.gain.row(0).array() +
                 ln.bias.row(0).array();
  }
  return out;
}

Mat layer_norm_backward(const Mat& x, const LayerNormParams& ln, double eps,
                        const Mat& dy, Mat& dgain, Mat& dbias) {
  Mat dx(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + eps);
    const Eigen::ArrayXXd xhat = (x.row(r).array() - mean) * inv;
    const Eigen::ArrayXXd dyr = dy.row(r).array();
    dgain.row(0).array() += dyr * xhat;
    dbias.row(0).array() += dyr;
    const Eigen::ArrayXXd dxhat = dyr * ln.gain.row(0).array();
    const double m1 = dxhat.sum() / d;
    const double m2 = (dxhat * xhat).sum() / d;
    dx.row(r) = (inv * (dxhat - m1 - xhat * m2)).matrix();
  }
  return dx;
}

namespace {

// Returns d_x for one encoder layer, accumulating parameter grads.
Mat encoder_layer_backward(const ModelConfig& cfg,
                           const EncoderLayerParams& layer, const LayerTrace& t,
                           const Mat& d_out, bool train,
                           EncoderLayerParams& g) {
  const Eigen::Index tlen = t.x_in.rows();
  const int hd = cfg.head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Mat d_resid2 =
      layer_norm_backward(t.resid2, layer.ln_mlp, cfg.ln_eps, d_out,
                          g.ln_mlp.gain, g.ln_mlp.bias);
  Mat d_x_mid = d_resid2;
  Mat d_mlp_out = (train && t.mlp_dropmask.size() > 0)
                      ? Mat(d_resid2.cwiseProduct(t.mlp_dropmask))
                      : d_resid2;
  g.mlp.w2 += t.mlp_act.transpose() * d_mlp_out;
  g.mlp.b2 += column_sums(d_mlp_out);
  Mat d_mlp_act = d_mlp_out * layer.mlp.w2.transpose();
  Mat d_mlp_pre = d_mlp_act.cwiseProduct(
      t.mlp_pre.unaryExpr([](double v) { return gelu_grad(v); }));
  g.mlp.w1 += t.x_mid.transpose() * d_mlp_pre;
  g.mlp.b1 += column_sums(d_mlp_pre);
  d_x_mid += d_mlp_pre * layer.mlp.w1.transpose();

  Mat d_resid1 =
      layer_norm_backward(t.resid1, layer.ln_attn, cfg.ln_eps, d_x_mid,
                          g.ln_attn.gain, g.ln_attn.bias);
  Mat d_x = d_resid1;
  Mat d_attn_out = (train && t.attn_dropmask.size() > 0)
                       ? Mat(d_resid1.cwiseProduct(t.attn_dropmask))
                       : d_resid1;
  g.attn.w_o += t.heads_concat.transpose() * d_attn_out;
  g.attn.b_o += column_sums(d_attn_out);
  Mat d_concat = d_attn_out * layer.attn.w_o.transpose();

  Mat d_q = Mat::Zero(tlen, cfg.d);
  Mat d_k = Mat::Zero(tlen, cfg.d);
  Mat d_v = Mat::Zero(tlen, cfg.d);
  for (int h = 0; h < cfg.n_heads; ++h) {
    const auto qh = t.q.middleCols(h * hd, hd);
    const auto kh = t.k.middleCols(h * hd, hd);
    const auto vh = t.v.middleCols(h * hd, hd);
    const Mat& probs = t.attn[h];
    const Mat d_ctx = d_concat.middleCols(h * hd, hd);
    Mat d_probs = d_ctx * vh.transpose();
    d_v.middleCols(h * hd, hd) = probs.transpose() * d_ctx;
    // softmax backward, row-wise
    Mat d_scores(tlen, tlen);
    for (Eigen::Index r = 0; r < tlen; ++r) {
      const double dot = d_probs.row(r).dot(probs.row(r));
      d_scores.row(r) =
          (probs.row(r).array() * (d_probs.row(r).array() - dot)).matrix();
    }
    d_q.middleCols(h * hd, hd) = d_scores * kh * scale;
    d_k.middleCols(h * hd, hd) = d_scores.transpose() * qh * scale;
  }
  g.attn.w_q += t.x_in.transpose() * d_q;
  g.attn.b_q += column_sums(d_q);
  g.attn.w_k += t.x_in.transpose() * d_k;
  g.attn.b_k += column_sums(d_k);
  g.attn.w_v += t.x_in.transpose() * d_v;
  g.attn.b_v += column_sums(d_v);
  d_x += d_q * layer.attn.w_q.transpose() + d_k * layer.attn.w_k.transpose() +
         d_v * layer.attn.w_v.transpose();
  return d_x;
}

// Shared two-layer head backward; returns the gradient at the fused input.
Row head_backward(const MlpParams& head, const Row& input, const Row& hidden,
                  const Row& d_logits, MlpParams& g) {
  Row act = hidden.cwiseMax(0.0);
  g.w2 += act.transpose() * d_logits;
  g.b2 += d_logits;
  Row d_act = d_logits * head.w2.transpose();
  Row d_hidden = d_act.cwiseProduct(
      hidden.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  g.w1 += input.transpose() * d_hidden;
  g.b1 += d_hidden;
  return d_hidden * head.w1.transpose();
}

}  // namespace

void backward_pair(const Model& model, const PairInput& in,
                   const ForwardTrace& trace, const PairLabels& labels,
                   const label::LossWeights& weights, const Lambdas& lambdas,
                   ModelParams& grads) {
  if (!trace.train) {
    throw SchemaError("backward_pair: requires a train-mode forward trace");
  }
  const ModelConfig& cfg = model.config;
  const ModelParams& p = model.params;
  const Eigen::Index n = in.features.rows();
  const Eigen::Index tlen = n + 4;

  auto softmax_ce_grad = [](const Vec& probs, int label, double coeff) {
    Row d = coeff * probs.transpose();
    d(label) -= coeff;
    return d;
  };
  const Row d_slogits = softmax_ce_grad(
      trace.probs.subject, labels.subject,
      lambdas.subject * weights.object_weights[labels.subject]);
  const Row d_plogits = softmax_ce_grad(
      trace.probs.predicate, labels.predicate,
      lambdas.predicate * weights.predicate_weights[labels.predicate]);
  const Row d_ologits = softmax_ce_grad(
      trace.probs.object, labels.object,
      lambdas.object * weights.object_weights[labels.object]);

  const Row d_s_in = head_backward(p.object_head, trace.heads.s_in,
                                   trace.heads.s_hidden, d_slogits,
                                   grads.object_head);
  const Row d_o_in = head_backward(p.object_head, trace.heads.o_in,
                                   trace.heads.o_hidden, d_ologits,
                                   grads.object_head);
  const Row d_p_in = head_backward(p.predicate_head, trace.heads.p_in,
                                   trace.heads.p_hidden, d_plogits,
                                   grads.predicate_head);

  // Fusion: s = v_k + word_k W_word; o = v_l + word_l W_word;
  // p = t_p + t_k W_ts + t_l W_to + v_k W_vs + v_l W_vo.
  Mat d_enc = Mat::Zero(tlen, cfg.d);
  d_enc.row(in.subject) += d_s_in;
  const Row word_k = trace.word_vecs.row(0);
  const Row word_l = trace.word_vecs.row(2);
  grads.w_word += word_k.transpose() * d_s_in;
  grads.b_word += d_s_in;
  Row d_word_k = d_s_in * p.w_word.transpose();

  d_enc.row(in.object) += d_o_in;
  grads.w_word += word_l.transpose() * d_o_in;
  grads.b_word += d_o_in;
  Row d_word_l = d_o_in * p.w_word.transpose();

  const Row tk = trace.encoder_out.row(n);
  const Row tl = trace.encoder_out.row(n + 2);
  const Row vk = trace.encoder_out.row(in.subject);
  const Row vl = trace.encoder_out.row(in.object);
  d_enc.row(n + 1) += d_p_in;
  grads.w_ts += tk.transpose() * d_p_in;
  grads.b_ts += d_p_in;
  d_enc.row(n) += d_p_in * p.w_ts.transpose();
  grads.w_to += tl.transpose() * d_p_in;
  grads.b_to += d_p_in;
  d_enc.row(n + 2) += d_p_in * p.w_to.transpose();
  grads.w_vs += vk.transpose() * d_p_in;
  grads.b_vs += d_p_in;
  d_enc.row(in.subject) += d_p_in * p.w_vs.transpose();
  grads.w_vo += vl.transpose() * d_p_in;
  grads.b_vo += d_p_in;
  d_enc.row(in.object) += d_p_in * p.w_vo.transpose();

  // Encoder, in reverse.
  Mat d_x = d_enc;
  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    d_x = encoder_layer_backward(cfg, p.layers[li], trace.layers[li], d_x,
                                 trace.train, grads.layers[li]);
  }

  // Visual embedder.
  Mat d_vis = d_x.topRows(n);
  if (trace.visual.dropmask.size() > 0) {
    d_vis = d_vis.cwiseProduct(trace.visual.dropmask);
  }
  Mat d_pre = layer_norm_backward(trace.visual.pre_norm, p.ln_visual,
                                  cfg.ln_eps, d_vis, grads.ln_visual.gain,
                                  grads.ln_visual.bias);
  for (Eigen::Index i = 0; i < n; ++i) {
    grads.type_emb.row(trace.roles[i]) += d_pre.row(i);
  }
  Mat d_region_proj =
      layer_norm_backward(trace.visual.region_proj, p.ln_region, cfg.ln_eps,
                          d_pre, grads.ln_region.gain, grads.ln_region.bias);
  grads.w_r += in.features.transpose() * d_region_proj;
  grads.b_r += column_sums(d_region_proj);
  Mat d_geom_proj =
      layer_norm_backward(trace.visual.geom_proj, p.ln_geometry, cfg.ln_eps,
                          d_pre, grads.ln_geometry.gain, grads.ln_geometry.bias);
  grads.w_p += in.geometry.transpose() * d_geom_proj;
  grads.b_p += column_sums(d_geom_proj);

  // Textual embedder.
  Mat d_txt = d_x.bottomRows(4);
  if (trace.textual.dropmask.size() > 0) {
    d_txt = d_txt.cwiseProduct(trace.textual.dropmask);
  }
  Mat d_txt_pre = layer_norm_backward(trace.textual.pre_norm, p.ln_text,
                                      cfg.ln_eps, d_txt, grads.ln_text.gain,
                                      grads.ln_text.bias);
  grads.pos_emb += d_txt_pre;
  grads.w_e += trace.word_vecs.transpose() * d_txt_pre;
  grads.b_e += column_sums(d_txt_pre);

  if (cfg.train_word_embeddings) {
    Mat d_word_vecs = d_txt_pre * p.w_e.transpose();  // 4 x d_word
    const std::array<int, 4> slot_words = {in.subject_word, kMaskWord,
                                           in.object_word, kSepWord};
    const std::array<bool, 4> from_table = {trace.subject_word_from_table,
                                            true, trace.object_word_from_table,
                                            true};
    for (int m = 0; m < 4; ++m) {
      if (from_table[m]) {
        grads.word_emb.row(slot_words[m]) += d_word_vecs.row(m);
      }
    }
    if (trace.subject_word_from_table) {
      grads.word_emb.row(in.subject_word) += d_word_k;
    }
    if (trace.object_word_from_table) {
      grads.word_emb.row(in.object_word) += d_word_l;
    }
  }
}

}  // namespace sgg::model
