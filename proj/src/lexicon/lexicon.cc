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

#include "lexicon/lexicon.h"

#include <algorithm>
#include <cctype>

#include "core/dataset.h"
#include "text/parser.h"

#include <json.hpp>

namespace sgg::lex {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string last_word(const std::string& s) {
  const size_t pos = s.find_last_of(' ');
  return pos == std::string::npos ? s : s.substr(pos + 1);
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return false;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& big = a.size() <= b.size() ? b : a;
  for (const auto& x : small) {
    if (big.count(x)) return true;
  }
  return false;
}

}  // namespace

ConceptLexicon ConceptLexicon::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw SchemaError(path + ": expected a JSON object");
  ConceptLexicon lex;
  for (const auto& [name, entry] : j.items()) {
    ConceptEntry e;
    if (entry.contains("lemmas")) {
      for (const auto& v : entry["lemmas"]) e.lemmas.insert(lower(v.get<std::string>()));
    }
    if (entry.contains("synsets")) {
      for (const auto& v : entry["synsets"]) e.synsets.insert(lower(v.get<std::string>()));
    }
    if (entry.contains("hypernyms")) {
      for (const auto& v : entry["hypernyms"]) e.hypernyms.insert(lower(v.get<std::string>()));
    }
    if (entry.contains("root")) e.root = lower(entry["root"].get<std::string>());
    if (e.root.empty()) {
      throw SchemaError(path + ": concept '" + name + "': root must be nonempty");
    }
    lex.add(name, std::move(e));
  }
  return lex;
}

void ConceptLexicon::save(const std::string& path) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, e] : entries_) {
    nlohmann::ordered_json ej;
    ej["lemmas"] = std::vector<std::string>(e.lemmas.begin(), e.lemmas.end());
    ej["synsets"] = std::vector<std::string>(e.synsets.begin(), e.synsets.end());
    ej["hypernyms"] =
        std::vector<std::string>(e.hypernyms.begin(), e.hypernyms.end());
    ej["root"] = e.root;
    j[name] = std::move(ej);
  }
  write_text_file(path, j.dump(2) + "\n");
}

void ConceptLexicon::add(const std::string& name, ConceptEntry entry) {
  entries_[lower(name)] = std::move(entry);
}

const ConceptEntry* ConceptLexicon::find(const std::string& name) const {
  auto it = entries_.find(lower(name));
  return it == entries_.end() ? nullptr : &it->second;
}

std::string ConceptLexicon::root_form(const std::string& name) const {
  if (const ConceptEntry* e = find(name)) return e->root;
  // Unknown concept: head word, lemmatized.
  return text::lemmatize(last_word(lower(name)), text::ParseRuleSet::embedded());
}

bool ConceptLexicon::match(const std::string& a, const std::string& b) const {
  const std::string la = lower(a), lb = lower(b);
  if (la == lb) return true;
  const ConceptEntry* ea = find(la);
  const ConceptEntry* eb = find(lb);
  if (ea != nullptr && eb != nullptr) {
    if (intersects(ea->synsets, eb->synsets)) return true;
    if (intersects(ea->lemmas, eb->lemmas)) return true;
    // Directional: a specializes b (tortoise -> animal), not the reverse.
    if (intersects(ea->hypernyms, eb->synsets)) return true;
  }
  return root_form(la) == root_form(lb);
}

int match_object_category(const std::string& name, const Vocabulary& vocab,
                          const ConceptLexicon& lex) {
  for (int i = 1; i < vocab.object_count(); ++i) {
    if (lex.match(name, vocab.objects()[i])) return i;
  }
  return -1;
}

int match_predicate_category(const std::string& name,
                             const Vocabulary& vocab,
                             const ConceptLexicon& lex) {
  for (int i = 1; i < vocab.predicate_count(); ++i) {
    if (lex.match(name, vocab.predicates()[i])) return i;
  }
  return -1;
}

std::vector<Triplet> filter_triplets(const std::vector<Triplet>& triplets,
                                     const Vocabulary& vocab,
                                     const ConceptLexicon& lex,
                                     FilterMode mode) {
  if (mode == FilterMode::open) return triplets;
  std::vector<Triplet> out;
  for (const Triplet& t : triplets) {
    const int si = match_object_category(t.subject, vocab, lex);
    if (si < 0) continue;
    const int pi = match_predicate_category(t.predicate, vocab, lex);
    if (pi < 0) continue;
    const int oi = match_object_category(t.object, vocab, lex);
    if (oi < 0) continue;
    Triplet kept = t;
    kept.subject = vocab.objects()[si];
    kept.predicate = vocab.predicates()[pi];
    kept.object = vocab.objects()[oi];
    out.push_back(std::move(kept));
  }
  return out;
}

Vocabulary build_open_vocabulary(const std::vector<Triplet>& corpus,
                                 int min_obj_freq, int min_pred_freq) {
  std::map<std::string, long long> obj_counts, pred_counts;
  for (const Triplet& t : corpus) {
    ++obj_counts[lower(t.subject)];
    ++obj_counts[lower(t.object)];
    ++pred_counts[lower(t.predicate)];
  }
  auto select = [](const std::map<std::string, long long>& counts,
                   int min_freq) {
    std::vector<std::pair<std::string, long long>> kept;
    for (const auto& [name, count] : counts) {
      if (count >= min_freq) kept.emplace_back(name, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<std::string> names;
    names.reserve(kept.size());
    for (auto& [name, count] : kept) names.push_back(std::move(name));
    return names;
  };
  std::vector<std::string> objects = select(obj_counts, min_obj_freq);
  std::vector<std::string> predicates = select(pred_counts, min_pred_freq);
  if (objects.empty() || predicates.empty()) {
    throw SchemaError(
        "build_open_vocabulary: no category reaches the frequency threshold");
  }
  return Vocabulary::from_names(std::move(objects), std::move(predicates));
}

}  // namespace sgg::lex
