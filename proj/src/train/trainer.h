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

#ifndef SGGKIT_TRAIN_TRAINER_H_
#define SGGKIT_TRAIN_TRAINER_H_

#include <functional>
#include <ostream>
#include <vector>

#include "label/labeler.h"
#include "model/model.h"

namespace sgg::train {

struct TrainConfig {
  int batch_images = 32;
  int pairs_per_image = 16;
  double negative_ratio = 3.0;
  double lr = 0.0032;
  double momentum = 0.9;
  int epochs = 1;
  uint64_t seed = 0;
  model::Lambdas lambdas;
  bool weighted_loss = false;

  void validate() const;
};

// v <- momentum*v + g; theta <- theta - lr*v, tensor by tensor in registry
// order. Throws NumericError naming the tensor on a non-finite gradient.
void sgd_step(model::ModelParams& params, const model::ModelParams& grads,
              double lr, double momentum, model::ModelParams& velocity);

struct StepLog {
  int epoch = 0;
  int step = 0;
  double loss_s = 0.0;
  double loss_p = 0.0;
  double loss_o = 0.0;
  double total = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  double final_loss = 0.0;
};

using EpochCallback = std::function<void(int epoch, const model::Model&)>;

// SGD over pseudo-labeled pairs. Image order per epoch is a seeded
// permutation; per-image pair sampling and dropout streams are keyed by
// (seed, image id, epoch) so results do not depend on processing order.
// log_stream, when given, receives one JSON line per batch.
TrainResult train(model::Model& model, const Dataset& dataset,
                  const label::LabelSet& labels, const TrainConfig& cfg,
                  const label::LossWeights& weights,
                  std::ostream* log_stream = nullptr,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace sgg::train

#endif  // SGGKIT_TRAIN_TRAINER_H_
