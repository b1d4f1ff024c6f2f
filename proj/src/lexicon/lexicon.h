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

#ifndef SGGKIT_LEXICON_LEXICON_H_
#define SGGKIT_LEXICON_LEXICON_H_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/types.h"

namespace sgg::lex {

struct ConceptEntry {
  std::set<std::string> lemmas;
  std::set<std::string> synsets;
  std::set<std::string> hypernyms;  // synset ids up the chain
  std::string root;
};

// Concept knowledge exported from a WordNet-style resource. Lookups are
// case-insensitive; concepts without an entry fall back to root-form
// comparison, where the root of an unknown concept is the lemmatized head
// (last) word.
class ConceptLexicon {
 public:
  ConceptLexicon() = default;

  static ConceptLexicon load(const std::string& path);
  void save(const std::string& path) const;

  void add(const std::string& name, ConceptEntry entry);
  const ConceptEntry* find(const std::string& name) const;
  std::string root_form(const std::string& name) const;
  size_t size() const { return entries_.size(); }

  // True iff the concepts share a synset or lemma, a's hypernyms contain a
  // synset of b (specialization, directional), or the root forms agree.
  // Exact case-insensitive equality always matches.
  bool match(const std::string& a, const std::string& b) const;

 private:
  std::map<std::string, ConceptEntry> entries_;  // keys lowercased
};

inline bool concepts_match(const std::string& a, const std::string& b,
                           const ConceptLexicon& lex) {
  return lex.match(a, b);
}

enum class FilterMode { closed, open };

// Closed mode keeps triplets fully covered by the vocabulary and rewrites
// their fields to the matched category names (first match in vocabulary
// order). Open mode is the identity.
std::vector<Triplet> filter_triplets(const std::vector<Triplet>& triplets,
                                     const Vocabulary& vocab,
                                     const ConceptLexicon& lex,
                                     FilterMode mode);

// First vocabulary category (index >= 1) matching the name, or -1.
int match_object_category(const std::string& name, const Vocabulary& vocab,
                          const ConceptLexicon& lex);
int match_predicate_category(const std::string& name,
                             const Vocabulary& vocab,
                             const ConceptLexicon& lex);

// Frequency-thresholded vocabulary over corpus triplets: subjects/objects
// with count >= min_obj_freq, predicates >= min_pred_freq, ordered by
// descending count then name. Throws when either list ends up empty.
Vocabulary build_open_vocabulary(const std::vector<Triplet>& corpus,
                                 int min_obj_freq, int min_pred_freq);

}  // namespace sgg::lex

#endif  // SGGKIT_LEXICON_LEXICON_H_
