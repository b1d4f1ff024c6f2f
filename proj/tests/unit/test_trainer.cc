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

#include <cmath>
#include <filesystem>
#include <sstream>

#include "core/dataset.h"
#include "label/labeler.h"
#include "model/checkpoint.h"
#include "synth/synthesize.h"
#include "text/parser.h"
#include "train/trainer.h"

using namespace sgg;
using namespace sgg::model;
namespace trainer = sgg::train;
using sgg::train::TrainConfig;
using sgg::train::TrainResult;
using sgg::train::sgd_step;

namespace {

// Small labeled corpus from the synthetic generator.
struct TrainFixture {
  Dataset dataset;
  Vocabulary vocab;
  label::LabelSet labels;
  Model model;
};

TrainFixture make_fixture(uint64_t seed = 0) {
  synth::SynthConfig scfg;
  scfg.images = 6;
  scfg.object_classes = 4;
  scfg.predicate_classes = 3;
  scfg.regions_per_image = 4;
  scfg.relations = 5;
  scfg.d_vis = 8;
  scfg.seed = seed;
  synth::SynthResult s = synth::synthesize(scfg);
  text::parse_dataset(s.dataset, text::ParseRuleSet::embedded());
  label::PairFilterConfig pf;
  label::LabelSet labels =
      label::label_dataset(s.dataset, s.vocab, s.lexicon, pf,
                           lex::FilterMode::closed, seed);
  ModelConfig cfg;
  cfg.d = 16;
  cfg.n_heads = 2;
  cfg.head_dim = 8;
  cfg.n_layers = 1;
  cfg.mlp_dim = 20;
  cfg.d_vis = scfg.d_vis;
  cfg.d_word = 8;
  cfg.dropout_p = 0.0;
  Model m = build_model(cfg, s.vocab, collect_tag_words(s.dataset), seed);
  return TrainFixture{std::move(s.dataset), s.vocab, std::move(labels),
                      std::move(m)};
}

TrainConfig quick_config(int epochs, uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.batch_images = 4;
  cfg.pairs_per_image = 8;
  cfg.lr = 0.05;
  cfg.momentum = 0.9;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

std::string checkpoint_bytes(const Model& m) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "sggkit_train_ck.bin").string();
  save_model(m, path);
  return read_text_file(path);
}

}  // namespace

TEST_CASE("sgd_step arithmetic") {
  ModelConfig cfg;
  cfg.d = 4;
  cfg.n_heads = 1;
  cfg.head_dim = 4;
  cfg.n_layers = 1;
  cfg.mlp_dim = 4;
  cfg.d_vis = 4;
  cfg.d_word = 4;
  cfg.word_vocab_size = 4;
  cfg.n_obj_classes = 3;
  cfg.n_pred_classes = 3;
  ModelParams params = init_params(cfg, 0);
  ModelParams grads = zeros_like(params);
  ModelParams velocity = zeros_like(params);

  SUBCASE("single step without momentum") {
    params.w_r.setConstant(1.0);
    grads.w_r.setConstant(2.0);
    sgd_step(params, grads, 0.1, 0.0, velocity);
    CHECK(params.w_r(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    const ModelParams before = params;
    sgd_step(params, grads, 0.1, 0.9, velocity);
    CHECK((params.w_r - before.w_r).cwiseAbs().maxCoeff() == 0.0);
    CHECK((params.pos_emb - before.pos_emb).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("lr=0 leaves parameters unchanged for any gradient") {
    const ModelParams before = params;
    grads.w_r.setConstant(5.0);
    sgd_step(params, grads, 0.0, 0.9, velocity);
    CHECK((params.w_r - before.w_r).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two momentum steps match the hand-unrolled recurrence") {
    params.w_r.setConstant(1.0);
    grads.w_r.setConstant(0.5);
    const double lr = 0.1, mu = 0.9, g = 0.5;
    sgd_step(params, grads, lr, mu, velocity);
    sgd_step(params, grads, lr, mu, velocity);
    // v1 = g, theta1 = 1 - lr*g; v2 = mu*g + g, theta2 = theta1 - lr*v2
    const double expect = 1.0 - lr * g - lr * (mu * g + g);
    CHECK(params.w_r(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("non-finite gradient aborts naming the tensor") {
    grads.pos_emb(0, 0) = std::nan("");
    CHECK_THROWS_WITH_AS(sgd_step(params, grads, 0.1, 0.9, velocity),
                         doctest::Contains("text.position_embedding"),
                         NumericError);
  }
}

TEST_CASE("one small-lr step on a fixed batch decreases the loss") {
  TrainFixture fx = make_fixture(3);
  const label::LossWeights weights = label::LossWeights::identity(
      fx.vocab.object_count(), fx.vocab.predicate_count());

  // A fixed batch: first image, all its pairs.
  const ImageRecord& rec = fx.dataset.records[0];
  const auto& pairs = fx.labels.images[0].pairs;
  auto batch_loss = [&](const Model& m) {
    double total = 0.0;
    for (const auto& lp : pairs) {
      const PairInput in = make_pair_input(m, rec.regions, rec.width,
                                           rec.height, lp.subject_region,
                                           lp.object_region);
      const HeadProbs probs = forward_pair(m, in, false, 0);
      total += pair_loss(probs,
                         PairLabels{lp.subject_label, lp.predicate_label,
                                    lp.object_label},
                         weights, Lambdas{})
                   .total;
    }
    return total / static_cast<double>(pairs.size());
  };

  const double before = batch_loss(fx.model);
  ModelParams grads = zeros_like(fx.model.params);
  for (const auto& lp : pairs) {
    const PairInput in =
        make_pair_input(fx.model, rec.regions, rec.width, rec.height,
                        lp.subject_region, lp.object_region);
    ForwardTrace trace;
    forward_pair(fx.model, in, true, 11, &trace);
    backward_pair(fx.model, in, trace,
                  PairLabels{lp.subject_label, lp.predicate_label,
                             lp.object_label},
                  weights, Lambdas{}, grads);
  }
  ModelParams::visit(grads, [&](const std::string&, Mat& m) {
    m /= static_cast<double>(pairs.size());
  });
  ModelParams velocity = zeros_like(fx.model.params);
  sgd_step(fx.model.params, grads, 1e-3, 0.0, velocity);
  const double after = batch_loss(fx.model);
  CHECK(after < before);
}

TEST_CASE("training is deterministic under a fixed seed") {
  TrainFixture a = make_fixture(0);
  TrainFixture b = make_fixture(0);
  const label::LossWeights weights = label::LossWeights::identity(
      a.vocab.object_count(), a.vocab.predicate_count());
  const TrainConfig cfg = quick_config(3, 7);
  trainer::train(a.model, a.dataset, a.labels, cfg, weights);
  trainer::train(b.model, b.dataset, b.labels, cfg, weights);
  CHECK(checkpoint_bytes(a.model) == checkpoint_bytes(b.model));

  TrainFixture c = make_fixture(0);
  TrainConfig other = quick_config(3, 8);
  trainer::train(c.model, c.dataset, c.labels, other, weights);
  CHECK(checkpoint_bytes(a.model) != checkpoint_bytes(c.model));
}

TEST_CASE("all-unit loss weights train bit-identically to unweighted") {
  // compute_loss_weights with no usable target mass gives all-ones
  label::FrequencyTable caption, target;
  caption.object_counts = {0, 3, 4, 5, 2};
  caption.predicate_counts = {0, 4, 1, 2};
  target.object_counts = {0, 0, 0, 0, 0};
  target.predicate_counts = {0, 0, 0, 0};
  const label::LossWeights derived = label::compute_loss_weights(caption, target);
  for (double w : derived.object_weights) CHECK(w == 1.0);
  for (double w : derived.predicate_weights) CHECK(w == 1.0);

  TrainFixture a = make_fixture(1);
  TrainFixture b = make_fixture(1);
  TrainConfig cfg = quick_config(2, 5);
  const label::LossWeights unit = label::LossWeights::identity(
      a.vocab.object_count(), a.vocab.predicate_count());
  trainer::train(a.model, a.dataset, a.labels, cfg, unit);
  cfg.weighted_loss = true;
  trainer::train(b.model, b.dataset, b.labels, cfg, derived);
  CHECK(checkpoint_bytes(a.model) == checkpoint_bytes(b.model));
}

TEST_CASE("training rejects an empty labeled dataset and logs batches") {
  TrainFixture fx = make_fixture(2);
  const label::LossWeights weights = label::LossWeights::identity(
      fx.vocab.object_count(), fx.vocab.predicate_count());
  label::LabelSet empty;
  CHECK_THROWS_AS(
      trainer::train(fx.model, fx.dataset, empty, quick_config(1), weights),
      SchemaError);

  std::ostringstream log;
  int checkpoints = 0;
  const TrainResult result =
      trainer::train(fx.model, fx.dataset, fx.labels, quick_config(2), weights, &log,
            [&](int, const Model&) { ++checkpoints; });
  CHECK(checkpoints == 2);
  CHECK_FALSE(result.log.empty());
  // one epoch_start line per epoch plus one JSON line per step
  std::istringstream lines(log.str());
  std::string line;
  int step_lines = 0, epoch_lines = 0;
  while (std::getline(lines, line)) {
    if (line.find("epoch_start") != std::string::npos) {
      ++epoch_lines;
      CHECK(line.find("permutation_seed") != std::string::npos);
    } else if (!line.empty()) {
      ++step_lines;
      CHECK(line.find("loss_p") != std::string::npos);
      CHECK(line.find("total") != std::string::npos);
    }
  }
  CHECK(epoch_lines == 2);
  CHECK(step_lines == static_cast<int>(result.log.size()));
}
