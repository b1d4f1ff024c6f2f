/* Copyright 2026 The sggkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the sggkit shared library.
 *
 * All functions that can fail return an sgg_status; SGG_OK is 0. On failure
 * a thread-local message is available from sgg_last_error() until the next
 * failing call on the same thread. Objects are opaque handles created by
 * *_load/*_create functions and released with the matching *_free; strings
 * returned through char** out-parameters are heap-allocated and must be
 * released with sgg_string_free.
 */

#ifndef SGGKIT_SGGKIT_H_
#define SGGKIT_SGGKIT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SGG_API __declspec(dllexport)
#else
#define SGG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgg_status {
  SGG_OK = 0,
  SGG_ERROR_INVALID_ARGUMENT = 1,
  SGG_ERROR_SCHEMA = 2,  /* unreadable or malformed input */
  SGG_ERROR_NUMERIC = 3, /* non-finite values in a computation */
  SGG_ERROR_INTERNAL = 4
} sgg_status;

SGG_API const char* sgg_version(void);
SGG_API const char* sgg_status_name(sgg_status status);
SGG_API const char* sgg_last_error(void);
SGG_API void sgg_string_free(char* s);

/* ----------------------------------------------------------------------- */
/* Opaque handles                                                           */
/* ----------------------------------------------------------------------- */

typedef struct sgg_dataset sgg_dataset;       /* JSONL image records */
typedef struct sgg_vocabulary sgg_vocabulary; /* object/predicate categories */
typedef struct sgg_lexicon sgg_lexicon;       /* concept-matching lexicon */
typedef struct sgg_ruleset sgg_ruleset;       /* caption parsing rules */
typedef struct sgg_labels sgg_labels;         /* pseudo-labeled region pairs */
typedef struct sgg_model sgg_model;           /* triplet transformer */
typedef struct sgg_graphs sgg_graphs;         /* predicted scene graphs */
typedef struct sgg_report sgg_report;         /* evaluation report */

/* ----------------------------------------------------------------------- */
/* Datasets, vocabularies, lexicons, parse rules                            */
/* ----------------------------------------------------------------------- */

SGG_API sgg_status sgg_dataset_load(const char* path, sgg_dataset** out);
SGG_API sgg_status sgg_dataset_save(const sgg_dataset* dataset,
                                    const char* path);
SGG_API void sgg_dataset_free(sgg_dataset* dataset);
SGG_API size_t sgg_dataset_image_count(const sgg_dataset* dataset);
SGG_API int sgg_dataset_feature_dim(const sgg_dataset* dataset);

SGG_API sgg_status sgg_vocabulary_load(const char* path, sgg_vocabulary** out);
SGG_API sgg_status sgg_vocabulary_save(const sgg_vocabulary* vocab,
                                       const char* path);
SGG_API void sgg_vocabulary_free(sgg_vocabulary* vocab);
/* Counts include the background entry at index 0. */
SGG_API size_t sgg_vocabulary_object_count(const sgg_vocabulary* vocab);
SGG_API size_t sgg_vocabulary_predicate_count(const sgg_vocabulary* vocab);

SGG_API sgg_status sgg_lexicon_load(const char* path, sgg_lexicon** out);
SGG_API void sgg_lexicon_free(sgg_lexicon* lexicon);
/* 1 match, 0 no match, -1 invalid arguments. */
SGG_API int sgg_concepts_match(const sgg_lexicon* lexicon, const char* a,
                               const char* b);

SGG_API sgg_status sgg_ruleset_embedded(sgg_ruleset** out);
SGG_API sgg_status sgg_ruleset_load(const char* path, sgg_ruleset** out);
SGG_API void sgg_ruleset_free(sgg_ruleset* rules);

/* ----------------------------------------------------------------------- */
/* Pipeline stages                                                          */
/* ----------------------------------------------------------------------- */

/* Fills triplets on every record from its captions (records that already
 * carry triplets keep them). rules == NULL uses the embedded grammar. */
SGG_API sgg_status sgg_parse_captions(sgg_dataset* dataset,
                                      const sgg_ruleset* rules);

/* Frequency-thresholded vocabulary over the parsed triplets of a dataset. */
SGG_API sgg_status sgg_build_open_vocabulary(const sgg_dataset* dataset,
                                             int min_obj_freq,
                                             int min_pred_freq,
                                             sgg_vocabulary** out);

typedef struct sgg_label_options {
  int closed_set;              /* 1: filter + rewrite triplets to the vocab */
  int require_overlap_or_near; /* region-pair proximity filter */
  double distance_ratio;       /* of the union-box diagonal */
  uint64_t seed;
} sgg_label_options;

SGG_API void sgg_label_options_init(sgg_label_options* opts);

SGG_API sgg_status sgg_assign_labels(const sgg_dataset* dataset,
                                     const sgg_vocabulary* vocab,
                                     const sgg_lexicon* lexicon,
                                     const sgg_label_options* opts,
                                     sgg_labels** out);
SGG_API sgg_status sgg_labels_save(const sgg_labels* labels, const char* path);
SGG_API sgg_status sgg_labels_load(const char* path, sgg_labels** out);
SGG_API void sgg_labels_free(sgg_labels* labels);
SGG_API size_t sgg_labels_image_count(const sgg_labels* labels);

/* Caption/target frequency tables plus the derived loss weights, written as
 * one JSON file consumable by sgg_train. */
SGG_API sgg_status sgg_compute_stats(const sgg_dataset* caption_data,
                                     const sgg_dataset* target_data,
                                     const sgg_vocabulary* vocab,
                                     const sgg_lexicon* lexicon,
                                     const char* out_path);

/* ----------------------------------------------------------------------- */
/* Model, training, inference, evaluation                                   */
/* ----------------------------------------------------------------------- */

/* config_json: architecture settings ("d", "n_layers", "n_heads",
 * "head_dim", "mlp_dim", "d_vis", "d_word", "dropout_p", ...) plus optional
 * "embeddings" (text embedding table path) and "freeze_word_embeddings".
 * Missing keys use the defaults. The word table is built from the dataset's
 * detector tags. */
SGG_API sgg_status sgg_model_create(const char* config_json,
                                    const sgg_dataset* dataset,
                                    const sgg_vocabulary* vocab, uint64_t seed,
                                    sgg_model** out);
SGG_API sgg_status sgg_model_load(const char* path, sgg_model** out);
SGG_API sgg_status sgg_model_save(const sgg_model* model, const char* path);
SGG_API void sgg_model_free(sgg_model* model);
/* A copy of the vocabulary the model was trained with. */
SGG_API sgg_status sgg_model_vocabulary(const sgg_model* model,
                                        sgg_vocabulary** out);

typedef struct sgg_train_options {
  int batch_images;
  int pairs_per_image;
  double negative_ratio; /* background pairs per positive; 0 disables */
  double lr;
  double momentum;
  int epochs;
  uint64_t seed;
  double lambda_subject;
  double lambda_predicate;
  double lambda_object;
  int weighted_loss; /* requires weights_path */
} sgg_train_options;

SGG_API void sgg_train_options_init(sgg_train_options* opts);

/* weights_path: stats JSON from sgg_compute_stats (may be NULL when
 * weighted_loss is 0). log_path: JSONL loss log (may be NULL).
 * checkpoint_path: written at every epoch end (may be NULL). */
SGG_API sgg_status sgg_train(sgg_model* model, const sgg_dataset* dataset,
                             const sgg_labels* labels,
                             const sgg_train_options* opts,
                             const char* weights_path, const char* log_path,
                             const char* checkpoint_path);

typedef enum sgg_task {
  SGG_TASK_SGDET = 0,
  SGG_TASK_SGCLS = 1,
  SGG_TASK_PREDCLS = 2
} sgg_task;

typedef enum sgg_ablation {
  SGG_ABLATE_NONE = 0,
  SGG_ABLATE_TEXT = 1,
  SGG_ABLATE_VISUAL = 2
} sgg_ablation;

typedef struct sgg_infer_options {
  int task;     /* sgg_task */
  int ablate;   /* sgg_ablation */
  int open_set; /* map onto a target vocabulary at inference time */
  int transfer_max; /* 0: sum matched probability mass, 1: max */
  int top_regions;
  uint64_t seed;
  int threads;
} sgg_infer_options;

SGG_API void sgg_infer_options_init(sgg_infer_options* opts);

/* target_vocab/lexicon are required when open_set is set, ignored otherwise. */
SGG_API sgg_status sgg_infer(const sgg_model* model, const sgg_dataset* dataset,
                             const sgg_infer_options* opts,
                             const sgg_vocabulary* target_vocab,
                             const sgg_lexicon* lexicon, sgg_graphs** out);
SGG_API sgg_status sgg_graphs_save(const sgg_graphs* graphs, const char* path);
SGG_API sgg_status sgg_graphs_load(const char* path, sgg_graphs** out);
SGG_API void sgg_graphs_free(sgg_graphs* graphs);
SGG_API size_t sgg_graphs_image_count(const sgg_graphs* graphs);
/* One Graphviz file per image under dir. */
SGG_API sgg_status sgg_graphs_write_dot(const sgg_graphs* graphs,
                                        const sgg_vocabulary* vocab,
                                        const char* dir);

typedef enum sgg_eval_mode {
  SGG_EVAL_SGDET = 0,
  SGG_EVAL_SGCLS = 1,
  SGG_EVAL_PREDCLS = 2
} sgg_eval_mode;

typedef struct sgg_eval_options {
  int mode; /* sgg_eval_mode */
  const int* ks;
  size_t ks_len;
  double iou_threshold;
  int micro; /* pool hits/totals instead of averaging per image */
} sgg_eval_options;

SGG_API void sgg_eval_options_init(sgg_eval_options* opts);

SGG_API sgg_status sgg_evaluate(const sgg_graphs* predictions,
                                const sgg_dataset* ground_truth,
                                const sgg_vocabulary* vocab,
                                const sgg_eval_options* opts,
                                sgg_report** out);
SGG_API sgg_status sgg_report_json(const sgg_report* report, char** out);
SGG_API sgg_status sgg_report_table(const sgg_report* report, char** out);
SGG_API void sgg_report_free(sgg_report* report);

/* ----------------------------------------------------------------------- */
/* Synthetic data and end-to-end pipeline                                   */
/* ----------------------------------------------------------------------- */

typedef struct sgg_synth_options {
  int images;
  int object_classes;
  int predicate_classes;
  int regions_per_image;
  int relations;
  double feature_noise;
  int d_vis;
  uint64_t seed;
} sgg_synth_options;

SGG_API void sgg_synth_options_init(sgg_synth_options* opts);

/* Writes dataset.jsonl, vocab.json and lexicon.json under out_dir. */
SGG_API sgg_status sgg_synthesize(const sgg_synth_options* opts,
                                  const char* out_dir);

/* Runs parse -> label -> train -> infer -> eval from a JSON config file.
 * report_json_out, when non-NULL, receives the consolidated report. */
SGG_API sgg_status sgg_pipeline_run(const char* config_path,
                                    char** report_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SGGKIT_SGGKIT_H_ */
