// Copyright 2026 The Entret Authors.
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

// Discrete candidate generators: an alias table with empirical priors
// P(e|m), its unigram/bigram extension, and Okapi BM25 over entity titles.

#ifndef ENTRET_BASELINES_H_
#define ENTRET_BASELINES_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "entret/corpus.h"

namespace entret {

inline constexpr size_t kMaxAliasCandidates = 100;

struct ScoredId {
  std::string id;
  double score = 0;

  bool operator==(const ScoredId &) const = default;
};

// Lowercased tokens joined by single spaces.
std::string NormalizeAlias(std::string_view text);

using AliasCounts = std::map<std::string, std::map<std::string, uint64_t>>;

struct AliasTable {
  // Candidates per alias by prior descending, then id ascending.
  std::map<std::string, std::vector<ScoredId>> entries;
  AliasCounts counts;

  const std::vector<ScoredId> *Find(std::string_view alias) const;
};

// Priors count(e, m) / sum_e' count(e', m), truncated per alias.
AliasTable AliasTableFromCounts(AliasCounts counts, size_t max_candidates = kMaxAliasCandidates);

AliasTable BuildAliasTable(const std::vector<MentionExample> &train);

enum class AliasExtensionMode {
  kPrecedence,  // n-gram aliases consulted only when the full span misses
  kMerged,      // n-gram counts merged into the full-span counts
};

AliasExtensionMode ParseAliasExtensionMode(std::string_view name);

struct ExtendedAliasTable {
  AliasTable primary;
  AliasTable fallback;  // empty in merged mode
  AliasExtensionMode mode = AliasExtensionMode::kPrecedence;
};

// Every unigram and bigram of each training span becomes an alias credited
// to the gold entity. Aliases are deduplicated per mention.
ExtendedAliasTable ExtendAliasTable(const AliasTable &table, const std::vector<MentionExample> &train,
                                    AliasExtensionMode mode = AliasExtensionMode::kPrecedence);

// Normalized exact match; unknown aliases yield nothing.
std::vector<ScoredId> AliasLookup(const AliasTable &table, std::string_view span, size_t k);
std::vector<ScoredId> AliasLookup(const ExtendedAliasTable &table, std::string_view span, size_t k);

// JSON Lines of {"alias": str, "candidates": [[entity_id, prior], ...]}.
// Counts are not stored; a loaded table has entries only.
std::string FormatAliasTable(const AliasTable &table);
AliasTable ParseAliasTable(std::string_view text);
void SaveAliasTable(const AliasTable &table, const std::string &path);
AliasTable LoadAliasTable(const std::string &path);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

struct Posting {
  uint32_t doc = 0;
  uint32_t tf = 0;
};

struct Bm25Index {
  std::unordered_map<std::string, std::vector<Posting>> postings;
  std::vector<uint32_t> doc_lengths;
  double avgdl = 0;
  std::vector<std::string> ids;
  std::vector<uint32_t> id_rank;
  Bm25Params params;

  size_t size() const { return ids.size(); }
  double Idf(size_t df) const;
};

// Documents are the tokenized titles.
Bm25Index BuildBm25(const EntityCatalog &catalog, Bm25Params params = {});

// Sums over distinct query terms; only documents sharing a term are
// returned, score descending then id ascending.
std::vector<ScoredId> Bm25Search(const Bm25Index &index, std::string_view query, size_t k);

}  // namespace entret

#endif  // ENTRET_BASELINES_H_
