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

#include "sggkit/sggkit.h"

#include <cstring>
#include <fstream>
#include <string>

#include "core/dataset.h"
#include "eval/evaluator.h"
#include "infer/inference.h"
#include "label/labeler.h"
#include "lexicon/lexicon.h"
#include "model/checkpoint.h"
#include "model/model.h"
#include "pipeline/pipeline.h"
#include "synth/synthesize.h"
#include "text/parser.h"
#include "train/trainer.h"

#include <json.hpp>

// Handle types wrap the core objects one to one.
struct sgg_dataset {
  sgg::Dataset value;
};
struct sgg_vocabulary {
  sgg::Vocabulary value;
};
struct sgg_lexicon {
  sgg::lex::ConceptLexicon value;
};
struct sgg_ruleset {
  sgg::text::ParseRuleSet value;
};
struct sgg_labels {
  sgg::label::LabelSet value;
};
struct sgg_model {
  sgg::model::Model value;
};
struct sgg_graphs {
  sgg::GraphSet value;
};
struct sgg_report {
  sgg::eval::EvalReport value;
};

namespace {

thread_local std::string t_last_error;

sgg_status fail(sgg_status status, const std::string& message) {
  t_last_error = message;
  return status;
}

template <typename F>
sgg_status guarded(F&& f) {
  try {
    return f();
  } catch (const sgg::NumericError& e) {
    return fail(SGG_ERROR_NUMERIC, e.what());
  } catch (const sgg::SchemaError& e) {
    return fail(SGG_ERROR_SCHEMA, e.what());
  } catch (const std::exception& e) {
    return fail(SGG_ERROR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sgg_version(void) { return "0.1.0"; }

const char* sgg_status_name(sgg_status status) {
  switch (status) {
    case SGG_OK:
      return "ok";
    case SGG_ERROR_INVALID_ARGUMENT:
      return "invalid_argument";
    case SGG_ERROR_SCHEMA:
      return "schema_error";
    case SGG_ERROR_NUMERIC:
      return "numeric_error";
    case SGG_ERROR_INTERNAL:
      return "internal_error";
  }
  return "unknown";
}

const char* sgg_last_error(void) { return t_last_error.c_str(); }

void sgg_string_free(char* s) { std::free(s); }

/* ------------------------------- dataset -------------------------------- */

sgg_status sgg_dataset_load(const char* path, sgg_dataset** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_dataset_load: null argument");
  }
  return guarded([&] {
    auto* ds = new sgg_dataset{sgg::load_dataset(path)};
    *out = ds;
    return SGG_OK;
  });
}

sgg_status sgg_dataset_save(const sgg_dataset* dataset, const char* path) {
  if (dataset == nullptr || path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_dataset_save: null argument");
  }
  return guarded([&] {
    sgg::save_dataset(dataset->value, path);
    return SGG_OK;
  });
}

void sgg_dataset_free(sgg_dataset* dataset) { delete dataset; }

size_t sgg_dataset_image_count(const sgg_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->value.records.size();
}

int sgg_dataset_feature_dim(const sgg_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->value.feature_dim;
}

/* ------------------------------ vocabulary ------------------------------ */

sgg_status sgg_vocabulary_load(const char* path, sgg_vocabulary** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_vocabulary_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_vocabulary{sgg::load_vocabulary(path)};
    return SGG_OK;
  });
}

sgg_status sgg_vocabulary_save(const sgg_vocabulary* vocab, const char* path) {
  if (vocab == nullptr || path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_vocabulary_save: null argument");
  }
  return guarded([&] {
    sgg::save_vocabulary(vocab->value, path);
    return SGG_OK;
  });
}

void sgg_vocabulary_free(sgg_vocabulary* vocab) { delete vocab; }

size_t sgg_vocabulary_object_count(const sgg_vocabulary* vocab) {
  return vocab == nullptr ? 0 : vocab->value.objects().size();
}

size_t sgg_vocabulary_predicate_count(const sgg_vocabulary* vocab) {
  return vocab == nullptr ? 0 : vocab->value.predicates().size();
}

/* ------------------------------- lexicon -------------------------------- */

sgg_status sgg_lexicon_load(const char* path, sgg_lexicon** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_lexicon_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_lexicon{sgg::lex::ConceptLexicon::load(path)};
    return SGG_OK;
  });
}

void sgg_lexicon_free(sgg_lexicon* lexicon) { delete lexicon; }

int sgg_concepts_match(const sgg_lexicon* lexicon, const char* a,
                       const char* b) {
  if (lexicon == nullptr || a == nullptr || b == nullptr || a[0] == '\0' ||
      b[0] == '\0') {
    return -1;
  }
  return lexicon->value.match(a, b) ? 1 : 0;
}

/* ------------------------------- rulesets ------------------------------- */

sgg_status sgg_ruleset_embedded(sgg_ruleset** out) {
  if (out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_ruleset_embedded: null out");
  }
  *out = new sgg_ruleset{sgg::text::ParseRuleSet::embedded()};
  return SGG_OK;
}

sgg_status sgg_ruleset_load(const char* path, sgg_ruleset** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_ruleset_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_ruleset{sgg::text::ParseRuleSet::from_json_file(path)};
    return SGG_OK;
  });
}

void sgg_ruleset_free(sgg_ruleset* rules) { delete rules; }

/* -------------------------------- stages -------------------------------- */

sgg_status sgg_parse_captions(sgg_dataset* dataset, const sgg_ruleset* rules) {
  if (dataset == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_parse_captions: null dataset");
  }
  return guarded([&] {
    const sgg::text::ParseRuleSet& r =
        rules != nullptr ? rules->value : sgg::text::ParseRuleSet::embedded();
    sgg::text::parse_dataset(dataset->value, r);
    return SGG_OK;
  });
}

sgg_status sgg_build_open_vocabulary(const sgg_dataset* dataset,
                                     int min_obj_freq, int min_pred_freq,
                                     sgg_vocabulary** out) {
  if (dataset == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT,
                "sgg_build_open_vocabulary: null argument");
  }
  return guarded([&] {
    std::vector<sgg::Triplet> corpus;
    for (const sgg::ImageRecord& rec : dataset->value.records) {
      if (!rec.parsed_triplets) continue;
      corpus.insert(corpus.end(), rec.parsed_triplets->begin(),
                    rec.parsed_triplets->end());
    }
    *out = new sgg_vocabulary{
        sgg::lex::build_open_vocabulary(corpus, min_obj_freq, min_pred_freq)};
    return SGG_OK;
  });
}

void sgg_label_options_init(sgg_label_options* opts) {
  if (opts == nullptr) return;
  opts->closed_set = 1;
  opts->require_overlap_or_near = 1;
  opts->distance_ratio = 0.5;
  opts->seed = 0;
}

sgg_status sgg_assign_labels(const sgg_dataset* dataset,
                             const sgg_vocabulary* vocab,
                             const sgg_lexicon* lexicon,
                             const sgg_label_options* opts, sgg_labels** out) {
  if (dataset == nullptr || vocab == nullptr || lexicon == nullptr ||
      opts == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_assign_labels: null argument");
  }
  return guarded([&] {
    sgg::label::PairFilterConfig cfg;
    cfg.require_overlap_or_near = opts->require_overlap_or_near != 0;
    cfg.distance_ratio = opts->distance_ratio;
    *out = new sgg_labels{sgg::label::label_dataset(
        dataset->value, vocab->value, lexicon->value, cfg,
        opts->closed_set != 0 ? sgg::lex::FilterMode::closed
                              : sgg::lex::FilterMode::open,
        opts->seed)};
    return SGG_OK;
  });
}

sgg_status sgg_labels_save(const sgg_labels* labels, const char* path) {
  if (labels == nullptr || path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_labels_save: null argument");
  }
  return guarded([&] {
    sgg::label::save_labels(labels->value, path);
    return SGG_OK;
  });
}

sgg_status sgg_labels_load(const char* path, sgg_labels** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_labels_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_labels{sgg::label::load_labels(path)};
    return SGG_OK;
  });
}

void sgg_labels_free(sgg_labels* labels) { delete labels; }

size_t sgg_labels_image_count(const sgg_labels* labels) {
  return labels == nullptr ? 0 : labels->value.images.size();
}

sgg_status sgg_compute_stats(const sgg_dataset* caption_data,
                             const sgg_dataset* target_data,
                             const sgg_vocabulary* vocab,
                             const sgg_lexicon* lexicon, const char* out_path) {
  if (caption_data == nullptr || target_data == nullptr || vocab == nullptr ||
      lexicon == nullptr || out_path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_compute_stats: null argument");
  }
  return guarded([&] {
    const auto caption = sgg::label::caption_frequencies(
        caption_data->value, vocab->value, lexicon->value);
    const auto target =
        sgg::label::target_frequencies(target_data->value, vocab->value);
    const auto weights = sgg::label::compute_loss_weights(caption, target);
    sgg::label::save_stats(caption, target, weights, vocab->value, out_path);
    return SGG_OK;
  });
}

/* --------------------------------- model -------------------------------- */

sgg_status sgg_model_create(const char* config_json, const sgg_dataset* dataset,
                            const sgg_vocabulary* vocab, uint64_t seed,
                            sgg_model** out) {
  if (config_json == nullptr || dataset == nullptr || vocab == nullptr ||
      out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_model_create: null argument");
  }
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw sgg::SchemaError(std::string("model config: ") + e.what());
    }
    sgg::model::ModelConfig cfg = sgg::model::config_from_json(j);
    if (dataset->value.feature_dim > 0) cfg.d_vis = dataset->value.feature_dim;
    const std::map<std::string, std::vector<double>>* pretrained = nullptr;
    std::map<std::string, std::vector<double>> table;
    if (j.contains("embeddings") && j["embeddings"].is_string()) {
      table = sgg::model::load_embedding_table(j["embeddings"].get<std::string>());
      pretrained = &table;
      cfg.train_word_embeddings = !j.value("freeze_word_embeddings", true);
    }
    *out = new sgg_model{sgg::model::build_model(
        cfg, vocab->value, sgg::model::collect_tag_words(dataset->value), seed,
        pretrained)};
    return SGG_OK;
  });
}

sgg_status sgg_model_load(const char* path, sgg_model** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_model_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_model{sgg::model::load_model(path)};
    return SGG_OK;
  });
}

sgg_status sgg_model_save(const sgg_model* model, const char* path) {
  if (model == nullptr || path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_model_save: null argument");
  }
  return guarded([&] {
    sgg::model::save_model(model->value, path);
    return SGG_OK;
  });
}

void sgg_model_free(sgg_model* model) { delete model; }

sgg_status sgg_model_vocabulary(const sgg_model* model, sgg_vocabulary** out) {
  if (model == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_model_vocabulary: null argument");
  }
  *out = new sgg_vocabulary{model->value.vocab};
  return SGG_OK;
}

void sgg_train_options_init(sgg_train_options* opts) {
  if (opts == nullptr) return;
  opts->batch_images = 32;
  opts->pairs_per_image = 16;
  opts->negative_ratio = 3.0;
  opts->lr = 0.0032;
  opts->momentum = 0.9;
  opts->epochs = 1;
  opts->seed = 0;
  opts->lambda_subject = 0.5;
  opts->lambda_predicate = 1.0;
  opts->lambda_object = 0.5;
  opts->weighted_loss = 0;
}

sgg_status sgg_train(sgg_model* model, const sgg_dataset* dataset,
                     const sgg_labels* labels, const sgg_train_options* opts,
                     const char* weights_path, const char* log_path,
                     const char* checkpoint_path) {
  if (model == nullptr || dataset == nullptr || labels == nullptr ||
      opts == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_train: null argument");
  }
  if (opts->weighted_loss != 0 && weights_path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT,
                "sgg_train: weighted_loss needs a weights_path");
  }
  return guarded([&] {
    sgg::train::TrainConfig cfg;
    cfg.batch_images = opts->batch_images;
    cfg.pairs_per_image = opts->pairs_per_image;
    cfg.negative_ratio = opts->negative_ratio;
    cfg.lr = opts->lr;
    cfg.momentum = opts->momentum;
    cfg.epochs = opts->epochs;
    cfg.seed = opts->seed;
    cfg.lambdas.subject = opts->lambda_subject;
    cfg.lambdas.predicate = opts->lambda_predicate;
    cfg.lambdas.object = opts->lambda_object;
    cfg.weighted_loss = opts->weighted_loss != 0;
    sgg::label::LossWeights weights =
        cfg.weighted_loss
            ? sgg::label::load_loss_weights(weights_path)
            : sgg::label::LossWeights::identity(
                  model->value.config.n_obj_classes,
                  model->value.config.n_pred_classes);
    std::ofstream log_file;
    std::ostream* log_stream = nullptr;
    if (log_path != nullptr) {
      log_file.open(log_path, std::ios::binary);
      if (!log_file) throw sgg::SchemaError(std::string(log_path) + ": cannot open");
      log_stream = &log_file;
    }
    sgg::train::EpochCallback on_epoch;
    if (checkpoint_path != nullptr) {
      const std::string path = checkpoint_path;
      on_epoch = [path](int, const sgg::model::Model& m) {
        sgg::model::save_model(m, path);
      };
    }
    sgg::train::train(model->value, dataset->value, labels->value, cfg, weights,
                      log_stream, on_epoch);
    return SGG_OK;
  });
}

/* ------------------------------- inference ------------------------------ */

void sgg_infer_options_init(sgg_infer_options* opts) {
  if (opts == nullptr) return;
  opts->task = SGG_TASK_SGDET;
  opts->ablate = SGG_ABLATE_NONE;
  opts->open_set = 0;
  opts->transfer_max = 0;
  opts->top_regions = 36;
  opts->seed = 0;
  opts->threads = 1;
}

sgg_status sgg_infer(const sgg_model* model, const sgg_dataset* dataset,
                     const sgg_infer_options* opts,
                     const sgg_vocabulary* target_vocab,
                     const sgg_lexicon* lexicon, sgg_graphs** out) {
  if (model == nullptr || dataset == nullptr || opts == nullptr ||
      out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_infer: null argument");
  }
  if (opts->open_set != 0 && (target_vocab == nullptr || lexicon == nullptr)) {
    return fail(SGG_ERROR_INVALID_ARGUMENT,
                "sgg_infer: open_set needs target_vocab and lexicon");
  }
  return guarded([&] {
    sgg::infer::InferOptions io;
    io.task = static_cast<sgg::infer::Task>(opts->task);
    io.ablate = static_cast<sgg::infer::Ablation>(opts->ablate);
    io.open_set = opts->open_set != 0;
    io.transfer = opts->transfer_max != 0 ? sgg::infer::Transfer::max
                                          : sgg::infer::Transfer::sum;
    io.top_regions = opts->top_regions;
    io.seed = opts->seed;
    *out = new sgg_graphs{sgg::infer::infer_dataset(
        model->value, dataset->value, io,
        target_vocab != nullptr ? &target_vocab->value : nullptr,
        lexicon != nullptr ? &lexicon->value : nullptr,
        opts->threads > 0 ? opts->threads : 1)};
    return SGG_OK;
  });
}

sgg_status sgg_graphs_save(const sgg_graphs* graphs, const char* path) {
  if (graphs == nullptr || path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_graphs_save: null argument");
  }
  return guarded([&] {
    sgg::save_graphs(graphs->value, path);
    return SGG_OK;
  });
}

sgg_status sgg_graphs_load(const char* path, sgg_graphs** out) {
  if (path == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_graphs_load: null argument");
  }
  return guarded([&] {
    *out = new sgg_graphs{sgg::load_graphs(path)};
    return SGG_OK;
  });
}

void sgg_graphs_free(sgg_graphs* graphs) { delete graphs; }

size_t sgg_graphs_image_count(const sgg_graphs* graphs) {
  return graphs == nullptr ? 0 : graphs->value.images.size();
}

sgg_status sgg_graphs_write_dot(const sgg_graphs* graphs,
                                const sgg_vocabulary* vocab, const char* dir) {
  if (graphs == nullptr || vocab == nullptr || dir == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_graphs_write_dot: null argument");
  }
  return guarded([&] {
    sgg::infer::write_dot(graphs->value, vocab->value, dir);
    return SGG_OK;
  });
}

/* ------------------------------ evaluation ------------------------------ */

void sgg_eval_options_init(sgg_eval_options* opts) {
  if (opts == nullptr) return;
  opts->mode = SGG_EVAL_SGDET;
  opts->ks = nullptr;
  opts->ks_len = 0;
  opts->iou_threshold = 0.5;
  opts->micro = 0;
}

sgg_status sgg_evaluate(const sgg_graphs* predictions,
                        const sgg_dataset* ground_truth,
                        const sgg_vocabulary* vocab,
                        const sgg_eval_options* opts, sgg_report** out) {
  if (predictions == nullptr || ground_truth == nullptr || vocab == nullptr ||
      opts == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_evaluate: null argument");
  }
  return guarded([&] {
    sgg::eval::EvalConfig cfg;
    cfg.mode = static_cast<sgg::eval::EvalMode>(opts->mode);
    if (opts->ks != nullptr && opts->ks_len > 0) {
      cfg.ks.assign(opts->ks, opts->ks + opts->ks_len);
    }
    cfg.iou_threshold = opts->iou_threshold;
    cfg.micro = opts->micro != 0;
    *out = new sgg_report{sgg::eval::evaluate(predictions->value,
                                              ground_truth->value, vocab->value,
                                              cfg)};
    return SGG_OK;
  });
}

sgg_status sgg_report_json(const sgg_report* report, char** out) {
  if (report == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_report_json: null argument");
  }
  return guarded([&] {
    *out = dup_string(sgg::eval::report_to_json(report->value));
    return SGG_OK;
  });
}

sgg_status sgg_report_table(const sgg_report* report, char** out) {
  if (report == nullptr || out == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_report_table: null argument");
  }
  return guarded([&] {
    *out = dup_string(sgg::eval::report_table(report->value));
    return SGG_OK;
  });
}

void sgg_report_free(sgg_report* report) { delete report; }

/* ---------------------------- synth + pipeline -------------------------- */

void sgg_synth_options_init(sgg_synth_options* opts) {
  if (opts == nullptr) return;
  sgg::synth::SynthConfig defaults;
  opts->images = defaults.images;
  opts->object_classes = defaults.object_classes;
  opts->predicate_classes = defaults.predicate_classes;
  opts->regions_per_image = defaults.regions_per_image;
  opts->relations = defaults.relations;
  opts->feature_noise = defaults.feature_noise;
  opts->d_vis = defaults.d_vis;
  opts->seed = defaults.seed;
}

sgg_status sgg_synthesize(const sgg_synth_options* opts, const char* out_dir) {
  if (opts == nullptr || out_dir == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_synthesize: null argument");
  }
  return guarded([&] {
    sgg::synth::SynthConfig cfg;
    cfg.images = opts->images;
    cfg.object_classes = opts->object_classes;
    cfg.predicate_classes = opts->predicate_classes;
    cfg.regions_per_image = opts->regions_per_image;
    cfg.relations = opts->relations;
    cfg.feature_noise = opts->feature_noise;
    cfg.d_vis = opts->d_vis;
    cfg.seed = opts->seed;
    sgg::synth::write_synth(cfg, out_dir);
    return SGG_OK;
  });
}

sgg_status sgg_pipeline_run(const char* config_path, char** report_json_out) {
  if (config_path == nullptr) {
    return fail(SGG_ERROR_INVALID_ARGUMENT, "sgg_pipeline_run: null config path");
  }
  return guarded([&] {
    const nlohmann::ordered_json report =
        sgg::pipeline::run_pipeline_file(config_path);
    if (report_json_out != nullptr) {
      *report_json_out = dup_string(report.dump(2));
    }
    return SGG_OK;
  });
}

} /* extern "C" */
