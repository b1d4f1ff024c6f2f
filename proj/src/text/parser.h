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

#ifndef SGGKIT_TEXT_PARSER_H_
#define SGGKIT_TEXT_PARSER_H_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/types.h"

namespace sgg::text {

enum class Tag { noun, verb, adp, det, adj, conj, other };

struct Token {
  std::string surface;  // lowercased
  std::string lemma;
  Tag tag = Tag::noun;
};

// Deterministic pattern grammar standing in for an external language parser.
// Word lists drive tagging; the lemma table handles irregular forms and
// suffix stripping (-s/-es/-ies/-ing/-ed) covers the rest.
struct ParseRuleSet {
  std::set<std::string> stop_words;   // determiners, possessives
  std::set<std::string> prepositions;
  std::set<std::string> verbs;        // verb lemmas
  std::set<std::string> adjectives;
  std::set<std::string> auxiliaries;  // copulas, skipped before a predicate
  std::set<std::string> conjunctions;
  std::map<std::string, std::string> lemma_overrides;
  std::vector<std::vector<std::string>> compound_prepositions;
  int max_np_len = 4;

  static const ParseRuleSet& embedded();
  static ParseRuleSet from_json_file(const std::string& path);
};

// Lowercases, strips punctuation, lemmatizes. Total: empty text -> empty.
std::vector<Token> tokenize(const std::string& caption,
                            const ParseRuleSet& rules);

std::string lemmatize(const std::string& word, const ParseRuleSet& rules);

// Left-to-right greedy extraction of (subject, predicate, object) triplets.
// Predicates are a verb lemma, verb+preposition, or a bare preposition; noun
// phrases reduce to the head noun with at most one modifying noun prefix.
// Duplicates within one caption are dropped.
std::vector<Triplet> extract_triplets(const std::vector<Token>& tokens,
                                      const ParseRuleSet& rules);

std::vector<Triplet> parse_caption(const std::string& caption,
                                   const ParseRuleSet& rules);

// Pre-parsed triplets pass through verbatim, sources preserved.
std::vector<Triplet> ingest_triplets(const ImageRecord& record);

// Fills parsed_triplets on every record: records that already carry triplets
// keep them; the rest get the built-in grammar over their captions.
void parse_dataset(Dataset& dataset, const ParseRuleSet& rules);

}  // namespace sgg::text

#endif  // SGGKIT_TEXT_PARSER_H_
