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

#include "text/parser.h"

#include <algorithm>
#include <cctype>
#include <optional>
#include <tuple>

#include "core/dataset.h"

#include <json.hpp>

namespace sgg::text {

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool ends_with(const std::string& s, const char* suffix) {
  const size_t n = std::string_view(suffix).size();
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

// Stem repair after stripping -ing/-ed: undouble trailing consonants
// (running -> run) and restore a dropped final e on short CVC stems
// (riding -> rid -> ride).
std::string repair_stem(std::string stem) {
  const size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) &&
      stem[n - 1] != 'l' && stem[n - 1] != 's' && stem[n - 1] != 'z') {
    stem.pop_back();
    return stem;
  }
  if (n >= 3 && n <= 4 && !is_vowel(stem[n - 1]) && is_vowel(stem[n - 2]) &&
      !is_vowel(stem[n - 3])) {
    stem.push_back('e');
  }
  return stem;
}

}  // namespace

std::string lemmatize(const std::string& word, const ParseRuleSet& rules) {
  auto it = rules.lemma_overrides.find(word);
  if (it != rules.lemma_overrides.end()) return it->second;
  if (ends_with(word, "ies") && word.size() >= 5) {
    return word.substr(0, word.size() - 3) + "y";
  }
  if ((ends_with(word, "xes") || ends_with(word, "ches") ||
       ends_with(word, "shes") || ends_with(word, "sses") ||
       ends_with(word, "zes")) &&
      word.size() >= 4) {
    return word.substr(0, word.size() - 2);
  }
  if (ends_with(word, "s") && !ends_with(word, "ss") && word.size() >= 3) {
    return word.substr(0, word.size() - 1);
  }
  if (ends_with(word, "ing") && word.size() >= 5) {
    return repair_stem(word.substr(0, word.size() - 3));
  }
  if (ends_with(word, "ed") && word.size() >= 4) {
    return repair_stem(word.substr(0, word.size() - 2));
  }
  return word;
}

std::vector<Token> tokenize(const std::string& caption,
                            const ParseRuleSet& rules) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : caption) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));

  std::vector<Token> tokens;
  tokens.reserve(words.size());
  for (std::string& w : words) {
    if (ends_with(w, "'s")) w.resize(w.size() - 2);
    w.erase(std::remove(w.begin(), w.end(), '\''), w.end());
    if (w.empty()) continue;

    Token t;
    t.surface = w;
    // Closed-class words keep their surface as lemma ("his" must not lose
    // its final s to the plural rule).
    if (rules.stop_words.count(w)) {
      t.lemma = w;
      t.tag = Tag::det;
    } else if (rules.conjunctions.count(w)) {
      t.lemma = w;
      t.tag = Tag::conj;
    } else if (rules.prepositions.count(w)) {
      t.lemma = w;
      t.tag = Tag::adp;
    } else if (std::all_of(w.begin(), w.end(),
                           [](unsigned char c) { return std::isdigit(c); })) {
      t.lemma = w;
      t.tag = Tag::other;
    } else {
      t.lemma = lemmatize(w, rules);
      if (rules.auxiliaries.count(t.lemma) || rules.verbs.count(t.lemma)) {
        t.tag = Tag::verb;
      } else if (rules.adjectives.count(w) || rules.adjectives.count(t.lemma)) {
        t.tag = Tag::adj;
      } else {
        t.tag = Tag::noun;
      }
    }
    tokens.push_back(std::move(t));
  }
  return tokens;
}

namespace {

struct NounPhrase {
  std::string phrase;
  size_t end = 0;
};

std::optional<NounPhrase> parse_np(const std::vector<Token>& tokens, size_t i,
                                   const ParseRuleSet& rules) {
  size_t j = i;
  while (j < tokens.size() &&
         (tokens[j].tag == Tag::det || tokens[j].tag == Tag::adj)) {
    ++j;
  }
  std::vector<const std::string*> nouns;
  while (j < tokens.size() && tokens[j].tag == Tag::noun &&
         static_cast<int>(nouns.size()) < rules.max_np_len) {
    nouns.push_back(&tokens[j].lemma);
    ++j;
  }
  if (nouns.empty()) return std::nullopt;
  NounPhrase np;
  // Head noun, prefixed by one modifying noun when present.
  if (nouns.size() >= 2) {
    np.phrase = *nouns[nouns.size() - 2] + " " + *nouns[nouns.size() - 1];
  } else {
    np.phrase = *nouns[0];
  }
  np.end = j;
  return np;
}

// Length of the compound preposition whose surfaces start at i, or 0.
size_t match_compound(const std::vector<Token>& tokens, size_t i,
                      const ParseRuleSet& rules, std::string* joined) {
  for (const auto& comp : rules.compound_prepositions) {
    if (comp.empty() || i + comp.size() > tokens.size()) continue;
    bool ok = true;
    for (size_t k = 0; k < comp.size(); ++k) {
      if (tokens[i + k].surface != comp[k]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      std::string s = comp[0];
      for (size_t k = 1; k < comp.size(); ++k) s += " " + comp[k];
      *joined = s;
      return comp.size();
    }
  }
  return 0;
}

}  // namespace

std::vector<Triplet> extract_triplets(const std::vector<Token>& tokens,
                                      const ParseRuleSet& rules) {
  std::vector<Triplet> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::optional<NounPhrase> subject;
  size_t i = 0;
  while (i < tokens.size()) {
    if (!subject) {
      if (auto np = parse_np(tokens, i, rules)) {
        subject = np;
        i = np->end;
      } else {
        ++i;
      }
      continue;
    }

    size_t j = i;
    while (j < tokens.size() && tokens[j].tag == Tag::verb &&
           rules.auxiliaries.count(tokens[j].lemma)) {
      ++j;  // copulas contribute nothing to the predicate
    }
    std::string pred;
    size_t after = j;
    std::string compound;
    if (j < tokens.size()) {
      if (size_t len = match_compound(tokens, j, rules, &compound)) {
        pred = compound;
        after = j + len;
      } else if (tokens[j].tag == Tag::verb) {
        pred = tokens[j].lemma;
        after = j + 1;
        if (after < tokens.size()) {
          if (size_t len = match_compound(tokens, after, rules, &compound)) {
            if (parse_np(tokens, after + len, rules)) {
              pred += " " + compound;
              after += len;
            }
          } else if (tokens[after].tag == Tag::adp &&
                     parse_np(tokens, after + 1, rules)) {
            pred += " " + tokens[after].lemma;
            after += 1;
          }
        }
      } else if (tokens[j].tag == Tag::adp) {
        pred = tokens[j].lemma;
        after = j + 1;
      }
    }

    if (pred.empty()) {
      subject.reset();
      if (!parse_np(tokens, i, rules)) ++i;
      continue;
    }
    if (auto np2 = parse_np(tokens, after, rules)) {
      if (seen.emplace(subject->phrase, pred, np2->phrase).second) {
        Triplet t;
        t.subject = subject->phrase;
        t.predicate = pred;
        t.object = np2->phrase;
        t.source = TripletSource::caption;
        out.push_back(std::move(t));
      }
      subject = np2;
      i = np2->end;
    } else {
      subject.reset();
      i = after;
    }
  }
  return out;
}

std::vector<Triplet> parse_caption(const std::string& caption,
                                   const ParseRuleSet& rules) {
  return extract_triplets(tokenize(caption, rules), rules);
}

std::vector<Triplet> ingest_triplets(const ImageRecord& record) {
  if (!record.parsed_triplets) return {};
  return *record.parsed_triplets;
}

void parse_dataset(Dataset& dataset, const ParseRuleSet& rules) {
  for (ImageRecord& rec : dataset.records) {
    if (rec.parsed_triplets) continue;  // pre-parsed input wins
    std::vector<Triplet> all;
    for (const std::string& caption : rec.captions) {
      auto ts = parse_caption(caption, rules);
      all.insert(all.end(), ts.begin(), ts.end());
    }
    rec.parsed_triplets = std::move(all);
  }
}

const ParseRuleSet& ParseRuleSet::embedded() {
  static const ParseRuleSet* rules = [] {
    auto* r = new ParseRuleSet();
    r->stop_words = {
        "a",     "an",    "the",   "his",  "her",   "its",     "their",
        "this",  "that",  "these", "those", "my",   "your",    "our",
        "some",  "any",   "each",  "every", "few",  "many",    "much",
        "several", "both", "all",  "no",    "one",  "two",     "three",
        "four",  "five",  "six",   "seven", "eight", "nine",   "ten"};
    r->prepositions = {
        "on",      "in",      "at",     "near",    "under",   "over",
        "above",   "below",   "behind", "beside",  "by",      "with",
        "of",      "along",   "across", "against", "between", "inside",
        "outside", "onto",    "upon",   "around",  "beneath", "underneath",
        "toward",  "towards", "beyond", "past",    "through", "atop",
        "amid",    "among"};
    r->verbs = {
        "ride",  "drive", "hold",   "wear",  "sit",    "stand", "walk",
        "run",   "eat",   "drink",  "play",  "look",   "watch", "carry",
        "pull",  "push",  "fly",    "jump",  "swim",   "catch", "throw",
        "hit",   "cut",   "read",   "talk",  "use",    "lie",   "lay",
        "hang",  "feed",  "kick",   "touch", "cover",  "fill",  "surround",
        "park",  "graze", "grab",   "lean",  "climb",  "race",  "smile",
        "wave",  "point", "ski",    "surf",  "skate",  "cook",  "serve",
        "pour",  "wash",  "brush",  "pet",   "hug",    "kiss",  "chase",
        "follow", "face", "cross",  "board", "load",   "attach", "connect",
        "have",  "do",    "go",     "see",   "come",   "get",   "make",
        "say",   "take",  "give",   "bring", "buy",    "swing", "teleport"};
    r->adjectives = {
        "red",    "blue",  "green",  "yellow", "black",  "white", "brown",
        "gray",   "grey",  "orange", "purple", "pink",   "young", "old",
        "small",  "large", "big",    "little", "tall",   "short", "long",
        "wooden", "metal", "plastic", "happy", "cute",   "dirty", "clean",
        "wet",    "dry",   "open",   "closed", "empty",  "full"};
    r->auxiliaries = {"be"};
    r->conjunctions = {"and", "or", "but"};
    r->lemma_overrides = {
        {"men", "man"},       {"women", "woman"},   {"children", "child"},
        {"people", "person"}, {"feet", "foot"},     {"teeth", "tooth"},
        {"mice", "mouse"},    {"geese", "goose"},   {"leaves", "leaf"},
        {"knives", "knife"},  {"wolves", "wolf"},   {"shelves", "shelf"},
        {"buses", "bus"},     {"glasses", "glass"}, {"skis", "ski"},
        {"is", "be"},         {"are", "be"},        {"was", "be"},
        {"were", "be"},       {"am", "be"},         {"been", "be"},
        {"being", "be"},      {"has", "have"},      {"had", "have"},
        {"having", "have"},   {"does", "do"},       {"did", "do"},
        {"ran", "run"},       {"sat", "sit"},       {"stood", "stand"},
        {"held", "hold"},     {"wore", "wear"},     {"ate", "eat"},
        {"drove", "drive"},   {"rode", "ride"},     {"flew", "fly"},
        {"swam", "swim"},     {"lay", "lie"},       {"lying", "lie"},
        {"threw", "throw"},   {"caught", "catch"},  {"bought", "buy"},
        {"brought", "bring"}, {"took", "take"},     {"gave", "give"},
        {"went", "go"},       {"saw", "see"},       {"came", "come"},
        {"got", "get"},       {"made", "make"},     {"said", "say"},
        {"hung", "hang"},     {"swung", "swing"},   {"grazing", "graze"},
        {"racing", "race"},   {"smiling", "smile"}, {"waving", "wave"},
        {"serving", "serve"}, {"using", "use"},     {"leaning", "lean"},
        {"chasing", "chase"}, {"facing", "face"},   {"covered", "cover"},
        {"surrounded", "surround"}};
    r->compound_prepositions = {{"in", "front", "of"},
                                {"next", "to"},
                                {"on", "top", "of"},
                                {"close", "to"}};
    r->max_np_len = 4;
    return r;
  }();
  return *rules;
}

ParseRuleSet ParseRuleSet::from_json_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
  ParseRuleSet rules = embedded();
  auto load_set = [&](const char* key, std::set<std::string>* dst) {
    if (!j.contains(key)) return;
    dst->clear();
    for (const auto& v : j[key]) dst->insert(v.get<std::string>());
  };
  load_set("stop_words", &rules.stop_words);
  load_set("prepositions", &rules.prepositions);
  load_set("verbs", &rules.verbs);
  load_set("adjectives", &rules.adjectives);
  load_set("auxiliaries", &rules.auxiliaries);
  load_set("conjunctions", &rules.conjunctions);
  if (j.contains("lemma_overrides")) {
    rules.lemma_overrides.clear();
    for (const auto& [k, v] : j["lemma_overrides"].items()) {
      rules.lemma_overrides.emplace(k, v.get<std::string>());
    }
  }
  if (j.contains("compound_prepositions")) {
    rules.compound_prepositions.clear();
    for (const auto& entry : j["compound_prepositions"]) {
      std::vector<std::string> words;
      if (entry.is_string()) {
        std::string s = entry.get<std::string>();
        std::string w;
        for (char c : s) {
          if (c == ' ') {
            if (!w.empty()) words.push_back(std::move(w));
            w.clear();
          } else {
            w.push_back(c);
          }
        }
        if (!w.empty()) words.push_back(std::move(w));
      } else {
        for (const auto& v : entry) words.push_back(v.get<std::string>());
      }
      if (!words.empty()) rules.compound_prepositions.push_back(std::move(words));
    }
  }
  if (j.contains("max_np_len")) rules.max_np_len = j["max_np_len"].get<int>();
  if (rules.max_np_len < 1) {
    throw SchemaError(path + ": max_np_len must be at least 1");
  }
  return rules;
}

}  // namespace sgg::text
