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

#include "entret/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "entret/mining.h"
#include "json.hpp"

namespace entret {

namespace {

bool ByScoreThenId(const ScoredId &a, const ScoredId &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

std::vector<ScoredId> Head(const std::vector<ScoredId> &list, size_t k) {
  if (k == 0) UsageError("lookup needs k >= 1");
  return std::vector<ScoredId>(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(
                                                                 std::min(k, list.size())));
}

// Full span plus its unigrams and bigrams, deduplicated.
std::set<std::string> SpanAliases(const TokenList &tokens, bool include_full) {
  std::set<std::string> out;
  if (include_full && !tokens.empty()) out.insert(JoinTokens(tokens));
  for (size_t i = 0; i < tokens.size(); ++i) {
    out.insert(tokens[i]);
    if (i + 1 < tokens.size()) out.insert(tokens[i] + " " + tokens[i + 1]);
  }
  return out;
}

TokenList SpanTokens(const MentionExample &ex) {
  return Tokenize(JoinTokens(ex.features.span.tokens));
}

}  // namespace

std::string NormalizeAlias(std::string_view text) { return JoinTokens(Tokenize(text)); }

const std::vector<ScoredId> *AliasTable::Find(std::string_view alias) const {
  auto it = entries.find(std::string(alias));
  return it == entries.end() ? nullptr : &it->second;
}

AliasTable AliasTableFromCounts(AliasCounts counts, size_t max_candidates) {
  AliasTable table;
  for (const auto &[alias, per_entity] : counts) {
    uint64_t total = 0;
    for (const auto &[id, c] : per_entity) total += c;
    if (total == 0) continue;
    std::vector<ScoredId> list;
    list.reserve(per_entity.size());
    for (const auto &[id, c] : per_entity) {
      list.push_back({id, static_cast<double>(c) / static_cast<double>(total)});
    }
    std::sort(list.begin(), list.end(), ByScoreThenId);
    if (list.size() > max_candidates) list.resize(max_candidates);
    table.entries.emplace(alias, std::move(list));
  }
  table.counts = std::move(counts);
  return table;
}

AliasTable BuildAliasTable(const std::vector<MentionExample> &train) {
  AliasCounts counts;
  for (const MentionExample &ex : train) {
    std::string alias = JoinTokens(SpanTokens(ex));
    if (alias.empty()) continue;
    ++counts[alias][ex.gold_entity_id];
  }
  return AliasTableFromCounts(std::move(counts));
}

AliasExtensionMode ParseAliasExtensionMode(std::string_view name) {
  if (name == "precedence") return AliasExtensionMode::kPrecedence;
  if (name == "merged") return AliasExtensionMode::kMerged;
  UsageError("unknown alias extension mode: " + std::string(name));
}

ExtendedAliasTable ExtendAliasTable(const AliasTable &table, const std::vector<MentionExample> &train,
                                    AliasExtensionMode mode) {
  ExtendedAliasTable out;
  out.mode = mode;
  if (mode == AliasExtensionMode::kPrecedence) {
    AliasCounts ngrams;
    for (const MentionExample &ex : train) {
      for (const std::string &alias : SpanAliases(SpanTokens(ex), false)) {
        ++ngrams[alias][ex.gold_entity_id];
      }
    }
    out.primary = table;
    out.fallback = AliasTableFromCounts(std::move(ngrams));
    return out;
  }
  AliasCounts merged = table.counts;
  for (const MentionExample &ex : train) {
    TokenList tokens = SpanTokens(ex);
    const std::string full = JoinTokens(tokens);
    for (const std::string &alias : SpanAliases(tokens, false)) {
      if (alias != full) ++merged[alias][ex.gold_entity_id];
    }
  }
  out.primary = AliasTableFromCounts(std::move(merged));
  return out;
}

std::vector<ScoredId> AliasLookup(const AliasTable &table, std::string_view span, size_t k) {
  if (k == 0) UsageError("lookup needs k >= 1");
  const std::vector<ScoredId> *list = table.Find(NormalizeAlias(span));
  return list == nullptr ? std::vector<ScoredId>() : Head(*list, k);
}

std::vector<ScoredId> AliasLookup(const ExtendedAliasTable &table, std::string_view span, size_t k) {
  if (k == 0) UsageError("lookup needs k >= 1");
  const std::string alias = NormalizeAlias(span);
  if (const std::vector<ScoredId> *list = table.primary.Find(alias)) return Head(*list, k);
  if (const std::vector<ScoredId> *list = table.fallback.Find(alias)) return Head(*list, k);
  return {};
}

std::string FormatAliasTable(const AliasTable &table) {
  std::string out;
  for (const auto &[alias, list] : table.entries) {
    nlohmann::ordered_json obj;
    obj["alias"] = alias;
    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const ScoredId &c : list) cands.push_back({c.id, c.score});
    obj["candidates"] = std::move(cands);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

AliasTable ParseAliasTable(std::string_view text) {
  AliasTable table;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      nlohmann::json obj = nlohmann::json::parse(line);
      std::string alias = obj.at("alias").get<std::string>();
      std::vector<ScoredId> list;
      for (const auto &c : obj.at("candidates")) {
        if (!c.is_array() || c.size() != 2) throw std::invalid_argument("candidate pair");
        list.push_back({c[0].get<std::string>(), c[1].get<double>()});
      }
      table.entries[alias] = std::move(list);
    } catch (const std::exception &e) {
      DataError("alias table: parse error at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

void SaveAliasTable(const AliasTable &table, const std::string &path) {
  WriteTextFile(path, FormatAliasTable(table));
}

AliasTable LoadAliasTable(const std::string &path) {
  std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ParseAliasTable(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

double Bm25Index::Idf(size_t df) const {
  const double n = static_cast<double>(size());
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

Bm25Index BuildBm25(const EntityCatalog &catalog, Bm25Params params) {
  if (!(params.k1 >= 0) || !(params.b >= 0 && params.b <= 1)) {
    UsageError("bm25 needs k1 >= 0 and b in [0, 1]");
  }
  Bm25Index index;
  index.params = params;
  uint64_t total = 0;
  for (size_t d = 0; d < catalog.size(); ++d) {
    TokenList tokens = Tokenize(catalog[d].title);
    index.ids.push_back(catalog[d].id);
    index.doc_lengths.push_back(static_cast<uint32_t>(tokens.size()));
    total += tokens.size();
    std::map<std::string, uint32_t> tf;
    for (const std::string &t : tokens) ++tf[t];
    for (const auto &[term, count] : tf) {
      index.postings[term].push_back({static_cast<uint32_t>(d), count});
    }
  }
  index.id_rank = IdRanks(index.ids);
  if (!index.ids.empty()) {
    index.avgdl = static_cast<double>(total) / static_cast<double>(index.ids.size());
    // Only reachable when every title is empty; nothing is retrievable then.
    if (index.avgdl == 0) index.avgdl = 1;
  }
  return index;
}

std::vector<ScoredId> Bm25Search(const Bm25Index &index, std::string_view query, size_t k) {
  if (k == 0) UsageError("bm25 search needs k >= 1");
  TokenList tokens = Tokenize(query);
  std::set<std::string> terms(tokens.begin(), tokens.end());
  const double k1 = index.params.k1, b = index.params.b;
  std::unordered_map<uint32_t, double> scores;
  for (const std::string &term : terms) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    const double idf = index.Idf(it->second.size());
    for (const Posting &p : it->second) {
      const double tf = p.tf;
      const double dl = index.doc_lengths[p.doc];
      scores[p.doc] += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / index.avgdl));
    }
  }
  std::vector<std::pair<uint32_t, double>> hits(scores.begin(), scores.end());
  auto better = [&](const auto &x, const auto &y) {
    if (x.second != y.second) return x.second > y.second;
    return index.id_rank[x.first] < index.id_rank[y.first];
  };
  const size_t take = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);
  std::vector<ScoredId> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.push_back({index.ids[hits[i].first], hits[i].second});
  return out;
}

}  // namespace entret
