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

#ifndef ENTRET_CORPUS_H_
#define ENTRET_CORPUS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entret/features.h"
#include "entret/records.h"

namespace entret {

// Ordered entity collection with unique ids.
class EntityCatalog {
 public:
  // Throws a data error naming the id if it is already present.
  void Add(EntityRecord record);

  std::optional<size_t> Find(std::string_view id) const;
  size_t IndexOf(std::string_view id) const;  // throws if absent

  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const EntityRecord &operator[](size_t i) const { return records_[i]; }
  const std::vector<EntityRecord> &records() const { return records_; }

  bool operator==(const EntityCatalog &other) const { return records_ == other.records_; }

 private:
  std::vector<EntityRecord> records_;
  std::unordered_map<std::string, size_t> index_;
};

struct MentionExample {
  std::string mention_id;
  MentionFeatures features;
  std::string gold_entity_id;

  bool operator==(const MentionExample &) const = default;
};

struct CorpusSplit {
  std::vector<MentionExample> train;
  std::vector<MentionExample> heldout;
  double holdout_fraction = 0;
};

// KB file: JSON Lines of {"id", "title", "paragraph", "categories"}.
EntityCatalog LoadEntities(const std::string &path);
EntityCatalog ParseEntities(std::string_view text);
void WriteEntities(const EntityCatalog &catalog, const std::string &path);
std::string FormatEntities(const EntityCatalog &catalog);

// Documents file: JSON Lines of {"doc_id", "tokens", "sentences", "anchors"}.
std::vector<AnnotatedDocument> LoadDocuments(const std::string &path);
std::vector<AnnotatedDocument> ParseDocuments(std::string_view text);
void WriteDocuments(const std::vector<AnnotatedDocument> &docs, const std::string &path);
std::string FormatDocuments(const std::vector<AnnotatedDocument> &docs);

// Checks sentence ranges and anchor containment.
void ValidateDocument(const AnnotatedDocument &doc);

// One example per anchor, in document order. Every gold id must resolve in
// the catalog.
std::vector<MentionExample> ExtractMentions(const std::vector<AnnotatedDocument> &docs,
                                            const EntityCatalog &catalog);

// Deterministic shuffle under 'seed', then partition. Each side keeps the
// original relative order.
CorpusSplit SplitExamples(const std::vector<MentionExample> &examples, double holdout_fraction,
                          uint64_t seed);

struct SyntheticConfig {
  uint32_t entities = 200;
  uint32_t families = 40;             // entities in a family share a surname
  uint32_t topic_vocab = 12;          // per-entity context vocabulary size
  uint32_t mentions_per_entity = 20;
  double ambiguous_fraction = 0.6;    // mentions using the bare surname
  double topic_rate = 0.5;            // context tokens drawn from the topic vocabulary
  uint32_t sentences_per_doc = 8;
  uint64_t seed = 7;
};

// Parses key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> ParseKeyValues(std::string_view text);

SyntheticConfig ParseSyntheticConfig(std::string_view text);
SyntheticConfig LoadSyntheticConfig(const std::string &path);
// Applies one key; returns false if the key is not a synthetic-corpus key.
bool SetSyntheticKey(SyntheticConfig &config, const std::string &key, const std::string &value);

struct SyntheticCorpus {
  EntityCatalog catalog;
  std::vector<AnnotatedDocument> documents;
};

// Entities come in surname families. Mentions either use the full name or
// the shared surname alone, so a fraction of spans is ambiguous and only the
// context (drawn from per-entity topic vocabularies) tells entities apart.
SyntheticCorpus GenerateSynthetic(const SyntheticConfig &config, uint64_t seed);

// Synthetic vocabulary used by GenerateSynthetic, exposed so tests can build
// contexts for specific entities.
std::string SyntheticSurname(uint32_t family);
std::string SyntheticFirstName(uint32_t entity);
std::string SyntheticTopicWord(uint32_t entity, uint32_t j);

}  // namespace entret

#endif  // ENTRET_CORPUS_H_
