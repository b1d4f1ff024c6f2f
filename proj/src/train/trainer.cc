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

#include "train/trainer.h"

#include <cmath>
#include <unordered_map>

#include <json.hpp>

namespace sgg::train {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw SchemaError("train config: lr must be positive");
  if (batch_images <= 0 || pairs_per_image <= 0) {
    throw SchemaError("train config: batch sizes must be positive");
  }
  if (epochs <= 0) throw SchemaError("train config: epochs must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw SchemaError("train config: momentum must be in [0,1)");
  }
  if (negative_ratio < 0.0) {
    throw SchemaError("train config: negative_ratio must be nonnegative");
  }
}

void sgd_step(model::ModelParams& params, const model::ModelParams& grads,
              double lr, double momentum, model::ModelParams& velocity) {
  auto prefs = model::registry(params);
  auto grefs = model::registry(const_cast<model::ModelParams&>(grads));
  auto vrefs = model::registry(velocity);
  for (size_t i = 0; i < prefs.size(); ++i) {
    const model::Mat& g = *grefs[i].tensor;
    if (!g.allFinite()) {
      throw NumericError("sgd_step: non-finite gradient in tensor '" +
                         grefs[i].name + "'");
    }
    model::Mat& v = *vrefs[i].tensor;
    v = momentum * v + g;
    *prefs[i].tensor -= lr * v;
  }
}

TrainResult train(model::Model& model, const Dataset& dataset,
                  const label::LabelSet& labels, const TrainConfig& cfg,
                  const label::LossWeights& weights, std::ostream* log_stream,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (labels.images.empty()) {
    throw SchemaError("train: empty labeled dataset");
  }
  if (static_cast<int>(weights.object_weights.size()) !=
          model.config.n_obj_classes ||
      static_cast<int>(weights.predicate_weights.size()) !=
          model.config.n_pred_classes) {
    throw SchemaError("train: loss weight vectors do not match the vocabulary");
  }

  std::unordered_map<std::string, const ImageRecord*> by_id;
  for (const ImageRecord& rec : dataset.records) {
    by_id.emplace(rec.image_id, &rec);
  }
  for (const label::ImageLabels& img : labels.images) {
    if (by_id.find(img.image_id) == by_id.end()) {
      throw SchemaError("train: labeled image '" + img.image_id +
                        "' missing from the dataset");
    }
  }

  model::ModelParams velocity = model::zeros_like(model.params);
  model::ModelParams grads = model::zeros_like(model.params);

  TrainResult result;
  const label::BatchSampleConfig sample_cfg{cfg.pairs_per_image,
                                            cfg.negative_ratio};
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const uint64_t perm_seed =
        mix_seed(cfg.seed, 0x9045u, static_cast<uint64_t>(epoch));
    std::vector<int> order(labels.images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng perm_rng(perm_seed);
    perm_rng.shuffle(order);
    if (log_stream != nullptr) {
      nlohmann::ordered_json j;
      j["event"] = "epoch_start";
      j["epoch"] = epoch;
      j["permutation_seed"] = perm_seed;
      (*log_stream) << j.dump() << "\n";
    }

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_images)) {
      const size_t stop = std::min(order.size(),
                                   start + static_cast<size_t>(cfg.batch_images));
      model::ModelParams::visit(grads,
                                [](const std::string&, model::Mat& m) { m.setZero(); });
      double sum_s = 0.0, sum_p = 0.0, sum_o = 0.0, sum_total = 0.0;
      int n_pairs = 0;

      for (size_t bi = start; bi < stop; ++bi) {
        const label::ImageLabels& img = labels.images[order[bi]];
        const ImageRecord& rec = *by_id.at(img.image_id);
        const uint64_t img_hash = fnv1a64(img.image_id);
        Rng pair_rng(mix_seed(cfg.seed, img_hash,
                              static_cast<uint64_t>(epoch)));
        const auto batch = label::sample_training_batch(img.pairs, sample_cfg,
                                                        pair_rng);
        for (size_t pi = 0; pi < batch.size(); ++pi) {
          const label::LabeledPair& lp = batch[pi];
          model::PairInput input = model::make_pair_input(
              model, rec.regions, rec.width, rec.height, lp.subject_region,
              lp.object_region);
          const uint64_t dropout_seed =
              mix_seed(mix_seed(cfg.seed, img_hash),
                       (static_cast<uint64_t>(epoch) << 20) | pi);
          model::ForwardTrace trace;
          model::forward_pair(model, input, /*train=*/true, dropout_seed,
                              &trace);
          const model::PairLabels pl{lp.subject_label, lp.predicate_label,
                                     lp.object_label};
          const model::LossBreakdown lb =
              model::pair_loss(trace.probs, pl, weights, cfg.lambdas);
          if (!std::isfinite(lb.total)) {
            throw NumericError("train: non-finite loss at epoch " +
                               std::to_string(epoch) + ", batch " +
                               std::to_string(step) + ", image '" +
                               img.image_id + "'");
          }
          sum_s += lb.subject;
          sum_p += lb.predicate;
          sum_o += lb.object;
          sum_total += lb.total;
          ++n_pairs;
          model::backward_pair(model, input, trace, pl, weights, cfg.lambdas,
                               grads);
        }
      }
      if (n_pairs == 0) continue;

      const double inv = 1.0 / static_cast<double>(n_pairs);
      model::ModelParams::visit(
          grads, [inv](const std::string&, model::Mat& m) { m *= inv; });
      sgd_step(model.params, grads, cfg.lr, cfg.momentum, velocity);

      StepLog log{epoch, step, sum_s * inv, sum_p * inv, sum_o * inv,
                  sum_total * inv};
      result.log.push_back(log);
      result.final_loss = log.total;
      if (log_stream != nullptr) {
        nlohmann::ordered_json j;
        j["epoch"] = log.epoch;
        j["step"] = log.step;
        j["loss_s"] = log.loss_s;
        j["loss_p"] = log.loss_p;
        j["loss_o"] = log.loss_o;
        j["total"] = log.total;
        (*log_stream) << j.dump() << "\n";
      }
      ++step;
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  return result;
}

}  // namespace sgg::train
