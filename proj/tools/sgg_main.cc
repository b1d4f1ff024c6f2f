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
// Command-line front end over the sggkit C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sggkit/sggkit.h"

namespace {

[[noreturn]] void die(const char* what, sgg_status status) {
  std::cerr << "error: " << what << ": " << sgg_status_name(status) << ": "
            << sgg_last_error() << "\n";
  std::exit(1);
}

void check(sgg_status status, const char* what) {
  if (status != SGG_OK) die(what, status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}


struct DatasetHandle {
  sgg_dataset* ptr = nullptr;
  ~DatasetHandle() { sgg_dataset_free(ptr); }
};
struct VocabHandle {
  sgg_vocabulary* ptr = nullptr;
  ~VocabHandle() { sgg_vocabulary_free(ptr); }
};
struct LexiconHandle {
  sgg_lexicon* ptr = nullptr;
  ~LexiconHandle() { sgg_lexicon_free(ptr); }
};
struct RulesHandle {
  sgg_ruleset* ptr = nullptr;
  ~RulesHandle() { sgg_ruleset_free(ptr); }
};
struct LabelsHandle {
  sgg_labels* ptr = nullptr;
  ~LabelsHandle() { sgg_labels_free(ptr); }
};
struct ModelHandle {
  sgg_model* ptr = nullptr;
  ~ModelHandle() { sgg_model_free(ptr); }
};
struct GraphsHandle {
  sgg_graphs* ptr = nullptr;
  ~GraphsHandle() { sgg_graphs_free(ptr); }
};
struct ReportHandle {
  sgg_report* ptr = nullptr;
  ~ReportHandle() { sgg_report_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene graph generation from image-caption supervision"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_option("--threads", threads,
                 "worker threads for per-image inference")
      ->capture_default_str();

  // parse ---------------------------------------------------------------
  auto* parse_cmd =
      app.add_subcommand("parse", "extract caption triplets into the dataset");
  std::string parse_data, parse_out, parse_rules;
  parse_cmd->add_option("--data", parse_data, "dataset JSONL")->required();
  parse_cmd->add_option("--out", parse_out, "output JSONL")->required();
  parse_cmd->add_option("--rules", parse_rules, "parse rule JSON override");

  // label ---------------------------------------------------------------
  auto* label_cmd =
      app.add_subcommand("label", "match triplets to region pairs");
  std::string label_data, label_vocab, label_lexicon, label_out, label_mode =
                                                                      "closed";
  std::string label_vocab_out;
  double label_distance_ratio = 0.5;
  bool label_no_proximity = false;
  int label_min_obj = 3, label_min_pred = 10;
  label_cmd->add_option("--data", label_data, "parsed dataset JSONL")->required();
  label_cmd->add_option("--vocab", label_vocab, "vocabulary JSON");
  label_cmd->add_option("--lexicon", label_lexicon, "lexicon JSON")->required();
  label_cmd->add_option("--out", label_out, "labeled pairs JSONL")->required();
  label_cmd->add_option("--mode", label_mode, "closed|open")
      ->check(CLI::IsMember({"closed", "open"}));
  label_cmd->add_option("--distance-ratio", label_distance_ratio,
                        "pair filter: center distance / union diagonal");
  label_cmd->add_flag("--no-proximity-filter", label_no_proximity,
                      "keep all ordered pairs");
  label_cmd->add_option("--min-obj-freq", label_min_obj,
                        "open mode: object frequency threshold");
  label_cmd->add_option("--min-pred-freq", label_min_pred,
                        "open mode: predicate frequency threshold");
  label_cmd->add_option("--vocab-out", label_vocab_out,
                        "open mode: write the built vocabulary here");

  // stats ---------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand(
      "stats", "frequency tables and loss weights from caption vs target data");
  std::string stats_data, stats_target, stats_vocab, stats_lexicon, stats_out;
  stats_cmd->add_option("--data", stats_data, "parsed caption dataset")->required();
  stats_cmd->add_option("--target", stats_target,
                        "dataset with ground-truth graphs");
  stats_cmd->add_option("--vocab", stats_vocab, "vocabulary JSON")->required();
  stats_cmd->add_option("--lexicon", stats_lexicon, "lexicon JSON")->required();
  stats_cmd->add_option("--out", stats_out, "stats JSON output")->required();

  // train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train the triplet model");
  std::string train_data, train_labels, train_vocab, train_config, train_out;
  train_cmd->add_option("--data", train_data, "dataset JSONL (features)")->required();
  train_cmd->add_option("--labels", train_labels, "labeled pairs JSONL")->required();
  train_cmd->add_option("--vocab", train_vocab, "vocabulary JSON")->required();
  train_cmd->add_option("--config", train_config,
                        "model + optimizer config JSON")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  std::string train_weights;
  train_cmd->add_option("--weights", train_weights,
                        "stats JSON for the weighted loss");

  // infer ---------------------------------------------------------------
  auto* infer_cmd = app.add_subcommand("infer", "generate scene graphs");
  std::string infer_ckpt, infer_data, infer_out, infer_task = "sgdet";
  std::string infer_mode = "closed", infer_ablate = "none";
  std::string infer_target_vocab, infer_lexicon, infer_dot;
  int infer_top = 36;
  bool infer_transfer_max = false;
  infer_cmd->add_option("--ckpt", infer_ckpt, "model checkpoint")->required();
  infer_cmd->add_option("--data", infer_data, "dataset JSONL")->required();
  infer_cmd->add_option("--out", infer_out, "graphs JSONL")->required();
  infer_cmd->add_option("--task", infer_task, "sgdet|sgcls|predcls")
      ->check(CLI::IsMember({"sgdet", "sgcls", "predcls"}));
  infer_cmd->add_option("--mode", infer_mode, "closed|open")
      ->check(CLI::IsMember({"closed", "open"}));
  infer_cmd->add_option("--ablate", infer_ablate, "none|text|visual")
      ->check(CLI::IsMember({"none", "text", "visual"}));
  infer_cmd->add_option("--target-vocab", infer_target_vocab,
                        "open mode: target vocabulary JSON");
  infer_cmd->add_option("--lexicon", infer_lexicon, "open mode: lexicon JSON");
  infer_cmd->add_option("--top-regions", infer_top,
                        "keep the top regions per image by detector score");
  infer_cmd->add_flag("--transfer-max", infer_transfer_max,
                      "open mode: move mass by max instead of sum");
  infer_cmd->add_option("--dot", infer_dot,
                        "also write one Graphviz file per image here");

  // eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Recall@K evaluation");
  std::string eval_pred, eval_gt, eval_vocab, eval_mode = "sgdet";
  std::string eval_ks = "20,50,100", eval_aggregate = "macro", eval_out;
  double eval_iou = 0.5;
  eval_cmd->add_option("--pred", eval_pred, "predicted graphs JSONL")->required();
  eval_cmd->add_option("--gt", eval_gt, "dataset JSONL with ground truth")->required();
  eval_cmd->add_option("--vocab", eval_vocab, "vocabulary JSON")->required();
  eval_cmd->add_option("--mode", eval_mode, "sgdet|sgcls|predcls")
      ->check(CLI::IsMember({"sgdet", "sgcls", "predcls"}));
  eval_cmd->add_option("--k", eval_ks, "comma-separated K values");
  eval_cmd->add_option("--iou", eval_iou, "IoU threshold (sgdet)");
  eval_cmd->add_option("--aggregate", eval_aggregate, "macro|micro")
      ->check(CLI::IsMember({"macro", "micro"}));
  eval_cmd->add_option("--out", eval_out, "also write the JSON report here");

  // synth-data ------------------------------------------------------------
  auto* synth_cmd =
      app.add_subcommand("synth-data", "generate a synthetic dataset");
  std::string synth_out;
  sgg_synth_options synth_opts;
  sgg_synth_options_init(&synth_opts);
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--images", synth_opts.images, "image count");
  synth_cmd->add_option("--objects", synth_opts.object_classes, "object classes");
  synth_cmd->add_option("--predicates", synth_opts.predicate_classes,
                        "predicate classes");
  synth_cmd->add_option("--regions", synth_opts.regions_per_image,
                        "regions per image");
  synth_cmd->add_option("--relations", synth_opts.relations,
                        "ordered class pairs carrying a predicate");
  synth_cmd->add_option("--noise", synth_opts.feature_noise,
                        "feature noise stddev");
  synth_cmd->add_option("--d-vis", synth_opts.d_vis, "feature dimension");

  // pipeline ----------------------------------------------------------------
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "run parse>label>train>infer>eval");
  std::string pipeline_config;
  pipeline_cmd->add_option("--config", pipeline_config, "pipeline config JSON")
      ->required();

  // global --seed/--threads may appear before or after the subcommand
  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (*parse_cmd) {
    DatasetHandle ds;
    check(sgg_dataset_load(parse_data.c_str(), &ds.ptr), "load dataset");
    RulesHandle rules;
    if (!parse_rules.empty()) {
      check(sgg_ruleset_load(parse_rules.c_str(), &rules.ptr), "load rules");
    }
    check(sgg_parse_captions(ds.ptr, rules.ptr), "parse captions");
    check(sgg_dataset_save(ds.ptr, parse_out.c_str()), "save dataset");
    std::cout << "parsed " << sgg_dataset_image_count(ds.ptr) << " images -> "
              << parse_out << "\n";
    return 0;
  }

  if (*label_cmd) {
    DatasetHandle ds;
    check(sgg_dataset_load(label_data.c_str(), &ds.ptr), "load dataset");
    LexiconHandle lex;
    check(sgg_lexicon_load(label_lexicon.c_str(), &lex.ptr), "load lexicon");
    VocabHandle vocab;
    if (label_mode == "open") {
      check(sgg_build_open_vocabulary(ds.ptr, label_min_obj, label_min_pred,
                                      &vocab.ptr),
            "build open vocabulary");
      if (!label_vocab_out.empty()) {
        check(sgg_vocabulary_save(vocab.ptr, label_vocab_out.c_str()),
              "save vocabulary");
      }
    } else {
      if (label_vocab.empty()) {
        std::cerr << "error: closed mode needs --vocab\n";
        return 1;
      }
      check(sgg_vocabulary_load(label_vocab.c_str(), &vocab.ptr), "load vocab");
    }
    sgg_label_options opts;
    sgg_label_options_init(&opts);
    opts.closed_set = label_mode == "closed" ? 1 : 0;
    opts.require_overlap_or_near = label_no_proximity ? 0 : 1;
    opts.distance_ratio = label_distance_ratio;
    opts.seed = seed;
    LabelsHandle labels;
    check(sgg_assign_labels(ds.ptr, vocab.ptr, lex.ptr, &opts, &labels.ptr),
          "assign labels");
    check(sgg_labels_save(labels.ptr, label_out.c_str()), "save labels");
    std::cout << "labeled " << sgg_labels_image_count(labels.ptr)
              << " images -> " << label_out << "\n";
    return 0;
  }

  if (*stats_cmd) {
    DatasetHandle ds, target;
    check(sgg_dataset_load(stats_data.c_str(), &ds.ptr), "load dataset");
    const std::string target_path =
        stats_target.empty() ? stats_data : stats_target;
    check(sgg_dataset_load(target_path.c_str(), &target.ptr), "load target");
    VocabHandle vocab;
    check(sgg_vocabulary_load(stats_vocab.c_str(), &vocab.ptr), "load vocab");
    LexiconHandle lex;
    check(sgg_lexicon_load(stats_lexicon.c_str(), &lex.ptr), "load lexicon");
    check(sgg_compute_stats(ds.ptr, target.ptr, vocab.ptr, lex.ptr,
                            stats_out.c_str()),
          "compute stats");
    std::cout << "stats -> " << stats_out << "\n";
    return 0;
  }

  if (*train_cmd) {
    DatasetHandle ds;
    check(sgg_dataset_load(train_data.c_str(), &ds.ptr), "load dataset");
    LabelsHandle labels;
    check(sgg_labels_load(train_labels.c_str(), &labels.ptr), "load labels");
    VocabHandle vocab;
    check(sgg_vocabulary_load(train_vocab.c_str(), &vocab.ptr), "load vocab");
    const std::string config = read_file(train_config);
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(config);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: " << train_config << ": " << e.what() << "\n";
      return 1;
    }
    ModelHandle model;
    check(sgg_model_create(config.c_str(), ds.ptr, vocab.ptr, seed, &model.ptr),
          "create model");
    sgg_train_options opts;
    sgg_train_options_init(&opts);
    opts.batch_images = cfg.value("batch_images", opts.batch_images);
    opts.pairs_per_image = cfg.value("pairs_per_image", opts.pairs_per_image);
    opts.negative_ratio = cfg.value("negative_ratio", opts.negative_ratio);
    opts.lr = cfg.value("lr", opts.lr);
    opts.momentum = cfg.value("momentum", opts.momentum);
    opts.epochs = cfg.value("epochs", opts.epochs);
    opts.lambda_subject = cfg.value("lambda_s", opts.lambda_subject);
    opts.lambda_predicate = cfg.value("lambda_p", opts.lambda_predicate);
    opts.lambda_object = cfg.value("lambda_o", opts.lambda_object);
    opts.weighted_loss = cfg.value("weighted_loss", false) ? 1 : 0;
    opts.seed = seed;
    const std::string ckpt = train_out + "/model.ckpt";
    const std::string log = train_out + "/train_log.jsonl";
    std::filesystem::create_directories(train_out);
    check(sgg_train(model.ptr, ds.ptr, labels.ptr, &opts,
                    train_weights.empty() ? nullptr : train_weights.c_str(),
                    log.c_str(), ckpt.c_str()),
          "train");
    check(sgg_model_save(model.ptr, ckpt.c_str()), "save checkpoint");
    std::cout << "checkpoint -> " << ckpt << "\n";
    return 0;
  }

  if (*infer_cmd) {
    ModelHandle model;
    check(sgg_model_load(infer_ckpt.c_str(), &model.ptr), "load checkpoint");
    DatasetHandle ds;
    check(sgg_dataset_load(infer_data.c_str(), &ds.ptr), "load dataset");
    sgg_infer_options opts;
    sgg_infer_options_init(&opts);
    opts.task = infer_task == "sgcls"     ? SGG_TASK_SGCLS
                : infer_task == "predcls" ? SGG_TASK_PREDCLS
                                          : SGG_TASK_SGDET;
    opts.ablate = infer_ablate == "text"     ? SGG_ABLATE_TEXT
                  : infer_ablate == "visual" ? SGG_ABLATE_VISUAL
                                             : SGG_ABLATE_NONE;
    opts.open_set = infer_mode == "open" ? 1 : 0;
    opts.transfer_max = infer_transfer_max ? 1 : 0;
    opts.top_regions = infer_top;
    opts.seed = seed;
    opts.threads = threads;
    VocabHandle target;
    LexiconHandle lex;
    if (opts.open_set != 0) {
      if (infer_target_vocab.empty() || infer_lexicon.empty()) {
        std::cerr << "error: open mode needs --target-vocab and --lexicon\n";
        return 1;
      }
      check(sgg_vocabulary_load(infer_target_vocab.c_str(), &target.ptr),
            "load target vocab");
      check(sgg_lexicon_load(infer_lexicon.c_str(), &lex.ptr), "load lexicon");
    }
    GraphsHandle graphs;
    check(sgg_infer(model.ptr, ds.ptr, &opts, target.ptr, lex.ptr, &graphs.ptr),
          "infer");
    check(sgg_graphs_save(graphs.ptr, infer_out.c_str()), "save graphs");
    if (!infer_dot.empty()) {
      // open-set graphs carry target-vocabulary labels, closed-set graphs
      // the checkpoint's own
      VocabHandle model_vocab;
      if (target.ptr == nullptr) {
        check(sgg_model_vocabulary(model.ptr, &model_vocab.ptr), "model vocab");
      }
      check(sgg_graphs_write_dot(
                graphs.ptr, target.ptr != nullptr ? target.ptr : model_vocab.ptr,
                infer_dot.c_str()),
            "write dot");
    }
    std::cout << "graphs -> " << infer_out << "\n";
    return 0;
  }

  if (*eval_cmd) {
    GraphsHandle graphs;
    check(sgg_graphs_load(eval_pred.c_str(), &graphs.ptr), "load graphs");
    DatasetHandle gt;
    check(sgg_dataset_load(eval_gt.c_str(), &gt.ptr), "load ground truth");
    VocabHandle vocab;
    check(sgg_vocabulary_load(eval_vocab.c_str(), &vocab.ptr), "load vocab");
    std::vector<int> ks;
    std::stringstream ss(eval_ks);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) ks.push_back(std::stoi(item));
    }
    sgg_eval_options opts;
    sgg_eval_options_init(&opts);
    opts.mode = eval_mode == "sgcls"     ? SGG_EVAL_SGCLS
                : eval_mode == "predcls" ? SGG_EVAL_PREDCLS
                                         : SGG_EVAL_SGDET;
    opts.ks = ks.data();
    opts.ks_len = ks.size();
    opts.iou_threshold = eval_iou;
    opts.micro = eval_aggregate == "micro" ? 1 : 0;
    ReportHandle report;
    check(sgg_evaluate(graphs.ptr, gt.ptr, vocab.ptr, &opts, &report.ptr),
          "evaluate");
    char* table = nullptr;
    check(sgg_report_table(report.ptr, &table), "format report");
    std::cout << table;
    sgg_string_free(table);
    if (!eval_out.empty()) {
      char* json = nullptr;
      check(sgg_report_json(report.ptr, &json), "serialize report");
      std::ofstream out(eval_out, std::ios::binary);
      out << json << "\n";
      sgg_string_free(json);
    }
    return 0;
  }

  if (*synth_cmd) {
    synth_opts.seed = seed;
    check(sgg_synthesize(&synth_opts, synth_out.c_str()), "synthesize");
    std::cout << "synthetic dataset -> " << synth_out << "\n";
    return 0;
  }

  if (*pipeline_cmd) {
    char* report = nullptr;
    check(sgg_pipeline_run(pipeline_config.c_str(), &report), "pipeline");
    std::cout << report << "\n";
    sgg_string_free(report);
    return 0;
  }

  return 0;
}
