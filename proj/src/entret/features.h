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

// Feature extraction for both towers. The mention side sees the span, five
// tokens of context on either side and the containing sentence with the span
// replaced by a placeholder. The entity side sees title, paragraph and the
// raw category names. Text features are bags of unigrams and bigrams mapped
// to ids through an NgramVocabulary with hashed out-of-vocabulary buckets.

#ifndef ENTRET_FEATURES_H_
#define ENTRET_FEATURES_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "entret/records.h"

namespace entret {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kMentionToken = "<mention>";
inline constexpr uint32_t kPadId = 0;
inline constexpr uint32_t kMentionId = 1;
inline constexpr size_t kContextWidth = 5;

using TokenList = std::vector<std::string>;

struct TextFeature {
  TokenList tokens;
  bool operator==(const TextFeature &) const = default;
};

struct MentionFeatures {
  TextFeature span;
  TextFeature left_context;   // exactly kContextWidth tokens
  TextFeature right_context;  // exactly kContextWidth tokens
  TextFeature sentence;       // span replaced by one kMentionToken

  bool operator==(const MentionFeatures &) const = default;
};

struct EntityFeatures {
  TextFeature title;
  TextFeature paragraph;
  std::vector<std::string> categories;  // verbatim, never tokenized

  bool operator==(const EntityFeatures &) const = default;
};

// Lowercases ASCII, splits on whitespace and strips leading/trailing
// punctuation from every token. Empty tokens are dropped.
TokenList Tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string JoinTokens(const TokenList &tokens);

using Bigram = std::pair<std::string, std::string>;

struct Ngrams {
  TokenList unigrams;
  std::vector<Bigram> bigrams;
};

Ngrams ExtractNgrams(const TokenList &tokens);

// Canonical byte string of a bigram, used both as vocabulary key and as
// hash input. Tokens never contain whitespace, so this is unambiguous.
std::string BigramKey(std::string_view first, std::string_view second);

// Fixed unigram/bigram ids plus a shared hashed OOV space. In-vocabulary ids
// are [0, size()); bucket ids are [size(), size() + oov_buckets()). Ids 0 and
// 1 are reserved for kPadToken and kMentionToken.
class NgramVocabulary {
 public:
  // Vocabulary holding only the reserved tokens.
  explicit NgramVocabulary(uint64_t oov_buckets);

  // Adds an n-gram key with the next free id; returns its id. Adding an
  // existing key returns the existing id.
  uint32_t Add(const std::string &key);

  uint32_t Id(std::string_view unigram) const;
  uint32_t Id(std::string_view first, std::string_view second) const;

  // Looks up a key without hashing; returns false if out of vocabulary.
  bool Contains(std::string_view key) const;

  uint32_t size() const { return static_cast<uint32_t>(keys_.size()); }
  uint64_t oov_buckets() const { return oov_buckets_; }
  // Number of embedding rows needed to cover every possible id.
  uint64_t rows() const { return keys_.size() + oov_buckets_; }

  const std::vector<std::string> &keys() const { return keys_; }

  // Binary format: "DEERVOC1", u64 entry count, entries as (u32 length,
  // bytes, u32 id), u64 oov_buckets. Little-endian.
  std::vector<uint8_t> Serialize() const;
  static NgramVocabulary Deserialize(std::span<const uint8_t> bytes);
  void Save(const std::string &path) const;
  static NgramVocabulary Load(const std::string &path);

  bool operator==(const NgramVocabulary &other) const {
    return keys_ == other.keys_ && oov_buckets_ == other.oov_buckets_;
  }

 private:
  uint32_t Lookup(std::string_view key) const;

  std::vector<std::string> keys_;
  std::unordered_map<std::string, uint32_t> ids_;
  uint64_t oov_buckets_;
};

// Mention-side features for one anchor. Throws a data error when the anchor
// is outside the document or not contained in a single sentence.
MentionFeatures BuildMentionFeatures(const AnnotatedDocument &doc, const Anchor &anchor);

EntityFeatures BuildEntityFeatures(const EntityRecord &record);

// Keeps the max_vocab most frequent unigrams and bigrams across the given
// features (ties broken lexicographically); everything else is hashed.
NgramVocabulary BuildVocabulary(std::span<const MentionFeatures> mentions,
                                std::span<const EntityFeatures> entities,
                                size_t max_vocab, uint64_t oov_buckets);

// Id-level view of a text feature. Padding tokens are removed before n-gram
// extraction so they never contribute to an average.
struct EncodedText {
  std::vector<uint32_t> unigrams;
  std::vector<uint32_t> bigrams;
};

enum MentionSlot { kSpan = 0, kLeft = 1, kRight = 2, kSentence = 3 };

struct EncodedMention {
  std::array<EncodedText, 4> text;  // indexed by MentionSlot
};

struct EncodedEntity {
  EncodedText title;
  EncodedText paragraph;
  std::vector<uint32_t> categories;  // rows of the category table
};

EncodedText EncodeText(const TextFeature &feature, const NgramVocabulary &vocab);
EncodedMention EncodeMention(const MentionFeatures &features, const NgramVocabulary &vocab);
EncodedEntity EncodeEntity(const EntityFeatures &features, const NgramVocabulary &vocab,
                           uint64_t category_rows);

// Sparse id of a category name in a table of 'rows' rows.
uint32_t CategoryRow(std::string_view name, uint64_t rows);

}  // namespace entret

#endif  // ENTRET_FEATURES_H_
