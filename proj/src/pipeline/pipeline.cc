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

#include "pipeline/pipeline.h"

#include <filesystem>
#include <fstream>

#include "core/dataset.h"
#include "core/rng.h"
#include "eval/evaluator.h"
#include "infer/inference.h"
#include "label/labeler.h"
#include "model/checkpoint.h"
#include "synth/synthesize.h"
#include "text/parser.h"
#include "train/trainer.h"

namespace sgg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

std::string resolve(const std::string& path, const std::string& base) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base) / p).string();
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

infer::Task task_from_name(const std::string& s) {
  if (s == "sgdet") return infer::Task::sgdet;
  if (s == "sgcls") return infer::Task::sgcls;
  if (s == "predcls") return infer::Task::predcls;
  throw SchemaError("unknown inference task '" + s + "'");
}

}  // namespace

ordered_json run_pipeline(const json& config, const std::string& config_dir) {
  const uint64_t seed = config.value("seed", 0ULL);
  const int threads = config.value("threads", 1);
  if (!config.contains("out_dir")) {
    throw std::runtime_error("pipeline config: out_dir is required");
  }
  const std::string out_dir = resolve(config.at("out_dir"), config_dir);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  ordered_json report;
  report["config_hash"] = hex64(fnv1a64(config.dump()));
  report["seed"] = seed;
  report["out_dir"] = out_dir;
  ordered_json& stages = report["stages"];

  // --- inputs -------------------------------------------------------------
  Dataset dataset;
  Vocabulary vocab;
  lex::ConceptLexicon lexicon;
  bool have_vocab = false;
  std::string data_path;
  if (config.contains("synth")) {
    stage("synth", [&] {
      synth::SynthConfig scfg;
      const json& sj = config["synth"];
      scfg.images = sj.value("images", scfg.images);
      scfg.object_classes = sj.value("object_classes", scfg.object_classes);
      scfg.predicate_classes =
          sj.value("predicate_classes", scfg.predicate_classes);
      scfg.regions_per_image =
          sj.value("regions_per_image", scfg.regions_per_image);
      scfg.relations = sj.value("relations", scfg.relations);
      scfg.feature_noise = sj.value("feature_noise", scfg.feature_noise);
      scfg.d_vis = sj.value("d_vis", scfg.d_vis);
      scfg.image_size = sj.value("image_size", scfg.image_size);
      scfg.seed = sj.value("seed", seed);
      synth::write_synth(scfg, out_dir);
      data_path = (out / "dataset.jsonl").string();
      dataset = load_dataset(data_path);
      vocab = load_vocabulary((out / "vocab.json").string());
      lexicon = lex::ConceptLexicon::load((out / "lexicon.json").string());
      have_vocab = true;
      stages["synth"] = {{"dataset", data_path},
                         {"vocab", (out / "vocab.json").string()},
                         {"lexicon", (out / "lexicon.json").string()},
                         {"seed", scfg.seed}};
      return 0;
    });
  } else {
    stage("load", [&] {
      if (!config.contains("data")) {
        throw SchemaError("pipeline config: either synth or data is required");
      }
      data_path = resolve(config.at("data"), config_dir);
      dataset = load_dataset(data_path);
      if (config.contains("vocab")) {
        vocab = load_vocabulary(resolve(config.at("vocab"), config_dir));
        have_vocab = true;
      }
      if (config.contains("lexicon")) {
        lexicon = lex::ConceptLexicon::load(resolve(config.at("lexicon"), config_dir));
      }
      stages["load"] = {{"dataset", data_path}};
      return 0;
    });
  }

  // --- parse ---------------------------------------------------------------
  const std::string parsed_path = (out / "parsed.jsonl").string();
  stage("parse", [&] {
    text::ParseRuleSet rules = text::ParseRuleSet::embedded();
    if (config.contains("rules") && config["rules"].is_string()) {
      rules = text::ParseRuleSet::from_json_file(
          resolve(config["rules"], config_dir));
    }
    text::parse_dataset(dataset, rules);
    save_dataset(dataset, parsed_path);
    stages["parse"] = {{"output", parsed_path}};
    return 0;
  });

  // --- label ---------------------------------------------------------------
  const json label_cfg = config.value("label", json::object());
  const bool open_mode = label_cfg.value("mode", std::string("closed")) == "open";
  const std::string labels_path = (out / "labels.jsonl").string();
  label::LabelSet labels;
  stage("label", [&] {
    if (open_mode) {
      std::vector<Triplet> corpus;
      for (const ImageRecord& rec : dataset.records) {
        if (!rec.parsed_triplets) continue;
        corpus.insert(corpus.end(), rec.parsed_triplets->begin(),
                      rec.parsed_triplets->end());
      }
      vocab = lex::build_open_vocabulary(corpus, label_cfg.value("min_obj_freq", 3),
                                         label_cfg.value("min_pred_freq", 10));
      save_vocabulary(vocab, (out / "vocab.open.json").string());
      have_vocab = true;
    }
    if (!have_vocab) {
      throw SchemaError("pipeline config: closed-set labeling needs a vocab");
    }
    label::PairFilterConfig pf;
    pf.require_overlap_or_near =
        label_cfg.value("require_overlap_or_near", pf.require_overlap_or_near);
    pf.distance_ratio = label_cfg.value("distance_ratio", pf.distance_ratio);
    labels = label::label_dataset(
        dataset, vocab, lexicon, pf,
        open_mode ? lex::FilterMode::open : lex::FilterMode::closed, seed);
    label::save_labels(labels, labels_path);
    stages["label"] = {{"output", labels_path},
                       {"seed", seed},
                       {"mode", open_mode ? "open" : "closed"}};
    return 0;
  });

  // --- stats / loss weights -------------------------------------------------
  const json train_cfg = config.value("train", json::object());
  const bool weighted = train_cfg.value("weighted_loss", false);
  label::LossWeights weights = label::LossWeights::identity(
      vocab.object_count(), vocab.predicate_count());
  if (weighted) {
    stage("stats", [&] {
      const auto caption = label::caption_frequencies(dataset, vocab, lexicon);
      const auto target = label::target_frequencies(dataset, vocab);
      weights = label::compute_loss_weights(caption, target);
      label::save_stats(caption, target, weights, vocab,
                        (out / "stats.json").string());
      stages["stats"] = {{"output", (out / "stats.json").string()}};
      return 0;
    });
  }

  // --- train -----------------------------------------------------------------
  const std::string ckpt_path = (out / "model.ckpt").string();
  const std::string train_log_path = (out / "train_log.jsonl").string();
  model::Model trained;
  stage("train", [&] {
    model::ModelConfig mcfg = model::config_from_json(train_cfg);
    mcfg.d_vis = dataset.feature_dim > 0 ? dataset.feature_dim : mcfg.d_vis;
    const std::map<std::string, std::vector<double>>* pretrained = nullptr;
    std::map<std::string, std::vector<double>> table;
    if (train_cfg.contains("embeddings") && train_cfg["embeddings"].is_string()) {
      table = model::load_embedding_table(
          resolve(train_cfg["embeddings"], config_dir));
      pretrained = &table;
      mcfg.train_word_embeddings =
          !train_cfg.value("freeze_word_embeddings", true);
    }
    trained = model::build_model(mcfg, vocab, model::collect_tag_words(dataset),
                                 seed, pretrained);
    train::TrainConfig tcfg;
    tcfg.batch_images = train_cfg.value("batch_images", tcfg.batch_images);
    tcfg.pairs_per_image = train_cfg.value("pairs_per_image", tcfg.pairs_per_image);
    tcfg.negative_ratio = train_cfg.value("negative_ratio", tcfg.negative_ratio);
    tcfg.lr = train_cfg.value("lr", tcfg.lr);
    tcfg.momentum = train_cfg.value("momentum", tcfg.momentum);
    tcfg.epochs = train_cfg.value("epochs", tcfg.epochs);
    tcfg.seed = seed;
    tcfg.lambdas.subject = train_cfg.value("lambda_s", tcfg.lambdas.subject);
    tcfg.lambdas.predicate = train_cfg.value("lambda_p", tcfg.lambdas.predicate);
    tcfg.lambdas.object = train_cfg.value("lambda_o", tcfg.lambdas.object);
    tcfg.weighted_loss = weighted;
    std::ofstream log(train_log_path, std::ios::binary);
    const auto result = train::train(
        trained, dataset, labels, tcfg, weights, &log,
        [&](int, const model::Model& m) { model::save_model(m, ckpt_path); });
    stages["train"] = {{"checkpoint", ckpt_path},
                       {"log", train_log_path},
                       {"seed", seed},
                       {"epochs", tcfg.epochs},
                       {"final_loss", result.final_loss}};
    return 0;
  });

  // --- infer + eval ------------------------------------------------------------
  const json infer_cfg = config.value("infer", json::object());
  const json eval_cfg = config.value("eval", json::object());
  std::vector<std::string> tasks = {"sgdet"};
  if (infer_cfg.contains("tasks")) {
    tasks.clear();
    for (const auto& t : infer_cfg["tasks"]) tasks.push_back(t.get<std::string>());
  }
  ordered_json eval_out;
  for (const std::string& task_name : tasks) {
    const std::string graphs_path =
        (out / ("graphs_" + task_name + ".jsonl")).string();
    GraphSet graphs;
    stage("infer", [&] {
      infer::InferOptions opts;
      opts.task = task_from_name(task_name);
      opts.seed = seed;
      opts.top_regions = infer_cfg.value("top_regions", opts.top_regions);
      const std::string ablate = infer_cfg.value("ablate", std::string("none"));
      opts.ablate = ablate == "text"     ? infer::Ablation::text
                    : ablate == "visual" ? infer::Ablation::visual
                                         : infer::Ablation::none;
      opts.open_set = infer_cfg.value("open_set", false);
      const Vocabulary* target = nullptr;
      Vocabulary target_vocab;
      if (opts.open_set) {
        target_vocab =
            load_vocabulary(resolve(config.at("vocab"), config_dir));
        target = &target_vocab;
      }
      graphs = infer::infer_dataset(trained, dataset, opts, target,
                                    opts.open_set ? &lexicon : nullptr, threads);
      save_graphs(graphs, graphs_path);
      return 0;
    });
    stage("eval", [&] {
      eval::EvalConfig ecfg;
      ecfg.mode = eval::eval_mode_from_name(task_name);
      if (eval_cfg.contains("k")) {
        ecfg.ks.clear();
        for (const auto& k : eval_cfg["k"]) ecfg.ks.push_back(k.get<int>());
      }
      ecfg.iou_threshold = eval_cfg.value("iou_threshold", ecfg.iou_threshold);
      ecfg.micro = eval_cfg.value("aggregate", std::string("macro")) == "micro";
      const eval::EvalReport er = evaluate(graphs, dataset, vocab, ecfg);
      const std::string report_path =
          (out / ("report_" + task_name + ".json")).string();
      write_text_file(report_path, eval::report_to_json(er) + "\n");
      eval_out[task_name] = json::parse(eval::report_to_json(er));
      stages["infer_" + task_name] = {{"graphs", graphs_path}, {"seed", seed}};
      stages["eval_" + task_name] = {{"report", report_path}};
      return 0;
    });
  }
  report["eval"] = std::move(eval_out);

  write_text_file((out / "report.json").string(), report.dump(2) + "\n");
  return report;
}

ordered_json run_pipeline_file(const std::string& config_path) {
  json config;
  try {
    config = json::parse(read_text_file(config_path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("pipeline config: ") + e.what());
  }
  const std::string dir = fs::path(config_path).parent_path().string();
  return run_pipeline(config, dir.empty() ? "." : dir);
}

}  // namespace sgg::pipeline
