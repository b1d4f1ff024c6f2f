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

#include "core/dataset.h"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace sgg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& field,
                       const std::string& message) {
  throw SchemaError(where + ": " + field + ": " + message);
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, key, "missing field");
  return *it;
}

double require_number(const json& j, const char* key,
                      const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) fail(where, key, "expected a number");
  return v.get<double>();
}

std::string require_string(const json& j, const char* key,
                           const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) fail(where, key, "expected a string");
  return v.get<std::string>();
}

Box parse_box(const json& v, const std::string& where,
              const std::string& field) {
  if (!v.is_array() || v.size() != 4 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number() || !v[3].is_number()) {
    fail(where, field, "expected [x1,y1,x2,y2]");
  }
  Box b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
        v[3].get<double>()};
  if (!b.valid()) fail(where, field, "box must satisfy x1<x2 and y1<y2");
  return b;
}

std::vector<double> parse_feature(const json& v, const std::string& where,
                                  const std::string& field) {
  if (!v.is_array()) fail(where, field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) fail(where, field, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

json array_from_box(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  out << content;
  if (!out) throw SchemaError(path + ": write failed");
}

ImageRecord record_from_json(const json& j, const std::string& where,
                             int* feature_dim) {
  if (!j.is_object()) fail(where, "record", "expected a JSON object");
  ImageRecord rec;
  rec.image_id = require_string(j, "image_id", where);
  if (rec.image_id.empty()) fail(where, "image_id", "must be nonempty");
  rec.width = require_number(j, "width", where);
  rec.height = require_number(j, "height", where);
  if (!(rec.width > 0.0) || !(rec.height > 0.0)) {
    fail(where, "width/height", "must be positive");
  }

  const json& regions = require(j, "regions", where);
  if (!regions.is_array()) fail(where, "regions", "expected an array");
  for (size_t i = 0; i < regions.size(); ++i) {
    const std::string rwhere = where + ": regions[" + std::to_string(i) + "]";
    const json& rj = regions[i];
    if (!rj.is_object()) fail(rwhere, "region", "expected an object");
    Region r;
    r.box = parse_box(require(rj, "box", rwhere), rwhere, "box");
    if (r.box.x1 < 0.0 || r.box.y1 < 0.0 || r.box.x2 > rec.width ||
        r.box.y2 > rec.height) {
      fail(rwhere, "box", "outside image bounds");
    }
    r.detector_label = require_string(rj, "label", rwhere);
    if (r.detector_label.empty()) fail(rwhere, "label", "must be nonempty");
    r.score = require_number(rj, "score", rwhere);
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
      fail(rwhere, "score", "must be in [0,1]");
    }
    r.feature = parse_feature(require(rj, "feature", rwhere), rwhere, "feature");
    if (feature_dim != nullptr) {
      if (*feature_dim == 0) *feature_dim = static_cast<int>(r.feature.size());
      if (static_cast<int>(r.feature.size()) != *feature_dim) {
        fail(rwhere, "feature",
             "length " + std::to_string(r.feature.size()) +
                 " != dataset feature dim " + std::to_string(*feature_dim));
      }
    }
    rec.regions.push_back(std::move(r));
  }

  const json& captions = require(j, "captions", where);
  if (!captions.is_array()) fail(where, "captions", "expected an array");
  for (const auto& c : captions) {
    if (!c.is_string()) fail(where, "captions", "expected strings");
    rec.captions.push_back(c.get<std::string>());
  }

  if (j.contains("triplets")) {
    const json& ts = j["triplets"];
    if (!ts.is_array()) fail(where, "triplets", "expected an array");
    std::vector<Triplet> parsed;
    for (size_t i = 0; i < ts.size(); ++i) {
      const std::string twhere = where + ": triplets[" + std::to_string(i) + "]";
      const json& tj = ts[i];
      if (!tj.is_object()) fail(twhere, "triplet", "expected an object");
      Triplet t;
      t.subject = require_string(tj, "s", twhere);
      t.predicate = require_string(tj, "p", twhere);
      t.object = require_string(tj, "o", twhere);
      if (t.subject.empty() || t.object.empty()) {
        fail(twhere, "s/o", "must be nonempty");
      }
      if (tj.contains("source")) {
        auto src = triplet_source_from_name(tj["source"].get<std::string>());
        if (!src) fail(twhere, "source", "unknown source");
        t.source = *src;
      }
      if (tj.contains("bind")) {
        const json& b = tj["bind"];
        if (!b.is_array() || b.size() != 2 || !b[0].is_number_integer() ||
            !b[1].is_number_integer()) {
          fail(twhere, "bind", "expected [subject_region, object_region]");
        }
        const int bs = b[0].get<int>();
        const int bo = b[1].get<int>();
        if (bs == bo || bs < 0 || bo < 0 ||
            bs >= static_cast<int>(rec.regions.size()) ||
            bo >= static_cast<int>(rec.regions.size())) {
          fail(twhere, "bind", "region indices must be distinct and in range");
        }
        t.binding = std::make_pair(bs, bo);
      }
      parsed.push_back(std::move(t));
    }
    rec.parsed_triplets = std::move(parsed);
  }

  if (j.contains("gt")) {
    const json& g = j["gt"];
    const std::string gwhere = where + ": gt";
    if (!g.is_object()) fail(gwhere, "gt", "expected an object");
    SceneGraph graph;
    const json& gregions = require(g, "regions", gwhere);
    if (!gregions.is_array()) fail(gwhere, "regions", "expected an array");
    for (size_t i = 0; i < gregions.size(); ++i) {
      const std::string nwhere = gwhere + ".regions[" + std::to_string(i) + "]";
      const json& nj = gregions[i];
      if (!nj.is_object()) fail(nwhere, "region", "expected an object");
      GraphNode node;
      node.box = parse_box(require(nj, "box", nwhere), nwhere, "box");
      const double li = require_number(nj, "label_index", nwhere);
      node.label_index = static_cast<int>(li);
      if (node.label_index < 0 || li != node.label_index) {
        fail(nwhere, "label_index", "must be a nonnegative integer");
      }
      graph.nodes.push_back(node);
      if (nj.contains("feature")) {
        rec.gt_features.push_back(
            parse_feature(nj["feature"], nwhere, "feature"));
      } else {
        rec.gt_features.emplace_back();
      }
      if (nj.contains("label")) {
        rec.gt_tags.push_back(nj["label"].get<std::string>());
      } else {
        rec.gt_tags.emplace_back();
      }
    }
    const json& gedges = require(g, "edges", gwhere);
    if (!gedges.is_array()) fail(gwhere, "edges", "expected an array");
    std::set<std::tuple<int, int, int>> seen;
    for (size_t i = 0; i < gedges.size(); ++i) {
      const std::string ewhere = gwhere + ".edges[" + std::to_string(i) + "]";
      const json& ej = gedges[i];
      if (!ej.is_array() || ej.size() != 3) {
        fail(ewhere, "edge", "expected [subject, predicate, object]");
      }
      GraphEdge e;
      e.subject = ej[0].get<int>();
      e.predicate = ej[1].get<int>();
      e.object = ej[2].get<int>();
      const int n = static_cast<int>(graph.nodes.size());
      if (e.subject < 0 || e.subject >= n || e.object < 0 || e.object >= n ||
          e.subject == e.object || e.predicate < 0) {
        fail(ewhere, "edge", "indices out of range");
      }
      // Duplicate GT triplets are collapsed; the first occurrence wins.
      if (seen.emplace(e.subject, e.predicate, e.object).second) {
        graph.edges.push_back(e);
      }
    }
    rec.gt = std::move(graph);
  }
  return rec;
}

ordered_json record_to_json(const ImageRecord& rec) {
  ordered_json j;
  j["image_id"] = rec.image_id;
  j["width"] = rec.width;
  j["height"] = rec.height;
  j["regions"] = ordered_json::array();
  for (const Region& r : rec.regions) {
    ordered_json rj;
    rj["box"] = array_from_box(r.box);
    rj["label"] = r.detector_label;
    rj["score"] = r.score;
    rj["feature"] = r.feature;
    j["regions"].push_back(std::move(rj));
  }
  j["captions"] = rec.captions;
  if (rec.parsed_triplets) {
    j["triplets"] = ordered_json::array();
    for (const Triplet& t : *rec.parsed_triplets) {
      ordered_json tj;
      tj["s"] = t.subject;
      tj["p"] = t.predicate;
      tj["o"] = t.object;
      tj["source"] = triplet_source_name(t.source);
      if (t.binding) {
        tj["bind"] = ordered_json::array({t.binding->first, t.binding->second});
      }
      j["triplets"].push_back(std::move(tj));
    }
  }
  if (rec.gt) {
    ordered_json g;
    g["regions"] = ordered_json::array();
    for (size_t i = 0; i < rec.gt->nodes.size(); ++i) {
      const GraphNode& node = rec.gt->nodes[i];
      ordered_json nj;
      nj["box"] = array_from_box(node.box);
      nj["label_index"] = node.label_index;
      if (i < rec.gt_features.size() && !rec.gt_features[i].empty()) {
        nj["feature"] = rec.gt_features[i];
      }
      if (i < rec.gt_tags.size() && !rec.gt_tags[i].empty()) {
        nj["label"] = rec.gt_tags[i];
      }
      g["regions"].push_back(std::move(nj));
    }
    g["edges"] = ordered_json::array();
    for (const GraphEdge& e : rec.gt->edges) {
      g["edges"].push_back(ordered_json::array({e.subject, e.predicate, e.object}));
    }
    j["gt"] = std::move(g);
  }
  return j;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  Dataset ds;
  std::string line;
  int lineno = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    ImageRecord rec = record_from_json(j, where, &ds.feature_dim);
    if (!ids.insert(rec.image_id).second) {
      fail(where, "image_id", "duplicate id '" + rec.image_id + "'");
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  for (const ImageRecord& rec : dataset.records) {
    out << record_to_json(rec).dump() << "\n";
  }
  if (!out) throw SchemaError(path + ": write failed");
}

Vocabulary load_vocabulary(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw SchemaError(path + ": expected a JSON object");
  std::vector<std::string> objects, predicates;
  for (const auto& v : require(j, "objects", path)) {
    objects.push_back(v.get<std::string>());
  }
  for (const auto& v : require(j, "predicates", path)) {
    predicates.push_back(v.get<std::string>());
  }
  return Vocabulary::from_names(std::move(objects), std::move(predicates));
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  ordered_json j;
  j["objects"] = std::vector<std::string>(vocab.objects().begin() + 1,
                                          vocab.objects().end());
  j["predicates"] = std::vector<std::string>(vocab.predicates().begin() + 1,
                                             vocab.predicates().end());
  write_text_file(path, j.dump(2) + "\n");
}

ordered_json graph_to_json(const ImageGraph& g) {
  ordered_json j;
  j["image_id"] = g.image_id;
  j["nodes"] = ordered_json::array();
  for (const GraphNode& n : g.graph.nodes) {
    ordered_json nj;
    nj["box"] = array_from_box(n.box);
    nj["label_index"] = n.label_index;
    j["nodes"].push_back(std::move(nj));
  }
  j["edges"] = ordered_json::array();
  for (const GraphEdge& e : g.graph.edges) {
    ordered_json ej;
    ej["s"] = e.subject;
    ej["p"] = e.predicate;
    ej["o"] = e.object;
    ej["score"] = e.score;
    j["edges"].push_back(std::move(ej));
  }
  return j;
}

GraphSet load_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path + ": cannot open file");
  GraphSet gs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    ImageGraph g;
    g.image_id = require_string(j, "image_id", where);
    for (const auto& nj : require(j, "nodes", where)) {
      GraphNode node;
      node.box = parse_box(require(nj, "box", where), where, "nodes.box");
      node.label_index = nj.at("label_index").get<int>();
      g.graph.nodes.push_back(node);
    }
    for (const auto& ej : require(j, "edges", where)) {
      GraphEdge e;
      e.subject = ej.at("s").get<int>();
      e.predicate = ej.at("p").get<int>();
      e.object = ej.at("o").get<int>();
      e.score = ej.at("score").get<double>();
      const int n = static_cast<int>(g.graph.nodes.size());
      if (e.subject < 0 || e.subject >= n || e.object < 0 || e.object >= n) {
        fail(where, "edges", "node index out of range");
      }
      g.graph.edges.push_back(e);
    }
    gs.images.push_back(std::move(g));
  }
  return gs;
}

void save_graphs(const GraphSet& graphs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError(path + ": cannot open file for writing");
  for (const ImageGraph& g : graphs.images) {
    out << graph_to_json(g).dump() << "\n";
  }
  if (!out) throw SchemaError(path + ": write failed");
}

}  // namespace sgg
