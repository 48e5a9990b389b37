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

#include "entret/features.h"

#include <algorithm>
#include <cctype>
#include <map>

#include "entret/common.h"

namespace entret {

namespace {

constexpr std::string_view kVocabMagic = "DEERVOC1";

bool IsPunct(unsigned char c) { return c < 128 && std::ispunct(c); }

template <typename Fn>
void ForEachNgramKey(const TokenList &tokens, Fn &&fn) {
  const std::string *prev = nullptr;
  for (const std::string &token : tokens) {
    if (token == kPadToken) continue;
    fn(token);
    if (prev != nullptr) fn(BigramKey(*prev, token));
    prev = &token;
  }
}

}  // namespace

TokenList Tokenize(std::string_view text) {
  TokenList tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t end = i;
    while (start < end && IsPunct(text[start])) ++start;
    while (end > start && IsPunct(text[end - 1])) --end;
    if (start == end) continue;
    std::string token(text.substr(start, end - start));
    for (char &c : token) {
      if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(c));
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::string JoinTokens(const TokenList &tokens) {
  std::string out;
  for (const std::string &t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Ngrams ExtractNgrams(const TokenList &tokens) {
  Ngrams ngrams;
  ngrams.unigrams = tokens;
  for (size_t i = 1; i < tokens.size(); ++i) {
    ngrams.bigrams.emplace_back(tokens[i - 1], tokens[i]);
  }
  return ngrams;
}

std::string BigramKey(std::string_view first, std::string_view second) {
  std::string key;
  key.reserve(first.size() + second.size() + 1);
  key.append(first);
  key.push_back(' ');
  key.append(second);
  return key;
}

NgramVocabulary::NgramVocabulary(uint64_t oov_buckets) : oov_buckets_(oov_buckets) {
  if (oov_buckets == 0) UsageError("oov_buckets must be positive");
  Add(std::string(kPadToken));
  Add(std::string(kMentionToken));
}

uint32_t NgramVocabulary::Add(const std::string &key) {
  auto [it, inserted] = ids_.emplace(key, static_cast<uint32_t>(keys_.size()));
  if (inserted) keys_.push_back(key);
  return it->second;
}

uint32_t NgramVocabulary::Lookup(std::string_view key) const {
  auto it = ids_.find(std::string(key));
  if (it != ids_.end()) return it->second;
  return static_cast<uint32_t>(keys_.size() + Fnv1a64(key) % oov_buckets_);
}

uint32_t NgramVocabulary::Id(std::string_view unigram) const { return Lookup(unigram); }

uint32_t NgramVocabulary::Id(std::string_view first, std::string_view second) const {
  return Lookup(BigramKey(first, second));
}

bool NgramVocabulary::Contains(std::string_view key) const {
  return ids_.count(std::string(key)) > 0;
}

std::vector<uint8_t> NgramVocabulary::Serialize() const {
  ByteWriter w;
  w.PutBytes(kVocabMagic);
  w.PutU64(keys_.size());
  for (uint32_t id = 0; id < keys_.size(); ++id) {
    w.PutString(keys_[id]);
    w.PutU32(id);
  }
  w.PutU64(oov_buckets_);
  return w.data();
}

NgramVocabulary NgramVocabulary::Deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "vocabulary");
  if (r.remaining() < kVocabMagic.size() || r.GetBytes(kVocabMagic.size()) != kVocabMagic) {
    DataError("vocabulary: bad magic header (expected DEERVOC1)");
  }
  uint64_t count = r.GetU64();
  std::vector<std::pair<uint32_t, std::string>> entries;
  for (uint64_t i = 0; i < count; ++i) {
    std::string key = r.GetString();
    uint32_t id = r.GetU32();
    entries.emplace_back(id, std::move(key));
  }
  uint64_t oov = r.GetU64();
  if (r.remaining() != 0) DataError("vocabulary: trailing bytes");
  std::sort(entries.begin(), entries.end());
  NgramVocabulary vocab(oov);
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != i) DataError("vocabulary: ids are not dense");
    if (i < 2) {
      if (vocab.keys_[i] != entries[i].second) DataError("vocabulary: reserved ids mismatch");
      continue;
    }
    if (vocab.Add(entries[i].second) != i) DataError("vocabulary: duplicate key " + entries[i].second);
  }
  return vocab;
}

void NgramVocabulary::Save(const std::string &path) const { WriteFileBytes(path, Serialize()); }

NgramVocabulary NgramVocabulary::Load(const std::string &path) {
  return Deserialize(ReadFileBytes(path));
}

MentionFeatures BuildMentionFeatures(const AnnotatedDocument &doc, const Anchor &anchor) {
  const size_t n = doc.tokens.size();
  if (anchor.start >= anchor.end || anchor.end > n) {
    DataError("document " + doc.doc_id + ": anchor [" + std::to_string(anchor.start) + "," +
              std::to_string(anchor.end) + ") out of range for " + std::to_string(n) + " tokens");
  }
  const TokenRange *sentence = nullptr;
  for (const TokenRange &s : doc.sentences) {
    if (s.begin <= anchor.start && anchor.end <= s.end) {
      sentence = &s;
      break;
    }
  }
  if (sentence == nullptr) {
    DataError("document " + doc.doc_id + ": anchor [" + std::to_string(anchor.start) + "," +
              std::to_string(anchor.end) + ") is not contained in a single sentence");
  }

  MentionFeatures f;
  f.span.tokens.assign(doc.tokens.begin() + anchor.start, doc.tokens.begin() + anchor.end);

  for (size_t i = 0; i < kContextWidth; ++i) {
    // Position anchor.start - kContextWidth + i, padded at the document edge.
    size_t offset = kContextWidth - i;
    f.left_context.tokens.push_back(anchor.start >= offset
                                        ? doc.tokens[anchor.start - offset]
                                        : std::string(kPadToken));
  }
  for (size_t i = 0; i < kContextWidth; ++i) {
    size_t pos = anchor.end + i;
    f.right_context.tokens.push_back(pos < n ? doc.tokens[pos] : std::string(kPadToken));
  }

  for (uint32_t i = sentence->begin; i < anchor.start; ++i) f.sentence.tokens.push_back(doc.tokens[i]);
  f.sentence.tokens.emplace_back(kMentionToken);
  for (uint32_t i = anchor.end; i < sentence->end; ++i) f.sentence.tokens.push_back(doc.tokens[i]);
  return f;
}

EntityFeatures BuildEntityFeatures(const EntityRecord &record) {
  EntityFeatures f;
  f.title.tokens = Tokenize(record.title);
  f.paragraph.tokens = Tokenize(record.paragraph);
  f.categories = record.categories;
  return f;
}

NgramVocabulary BuildVocabulary(std::span<const MentionFeatures> mentions,
                                std::span<const EntityFeatures> entities,
                                size_t max_vocab, uint64_t oov_buckets) {
  std::map<std::string, uint64_t> counts;
  auto count = [&](const TextFeature &feature) {
    ForEachNgramKey(feature.tokens, [&](const std::string &key) {
      if (key == kMentionToken) return;
      ++counts[key];
    });
  };
  for (const MentionFeatures &m : mentions) {
    count(m.span);
    count(m.left_context);
    count(m.right_context);
    count(m.sentence);
  }
  for (const EntityFeatures &e : entities) {
    count(e.title);
    count(e.paragraph);
  }

  std::vector<std::pair<std::string, uint64_t>> ranked(counts.begin(), counts.end());
  // counts is already lexicographic, so a stable sort by count keeps the tie rule.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  NgramVocabulary vocab(oov_buckets);
  for (size_t i = 0; i < ranked.size() && i < max_vocab; ++i) vocab.Add(ranked[i].first);
  return vocab;
}

EncodedText EncodeText(const TextFeature &feature, const NgramVocabulary &vocab) {
  EncodedText out;
  const std::string *prev = nullptr;
  for (const std::string &token : feature.tokens) {
    if (token == kPadToken) continue;
    out.unigrams.push_back(vocab.Id(token));
    if (prev != nullptr) out.bigrams.push_back(vocab.Id(*prev, token));
    prev = &token;
  }
  return out;
}

EncodedMention EncodeMention(const MentionFeatures &features, const NgramVocabulary &vocab) {
  EncodedMention out;
  out.text[kSpan] = EncodeText(features.span, vocab);
  out.text[kLeft] = EncodeText(features.left_context, vocab);
  out.text[kRight] = EncodeText(features.right_context, vocab);
  out.text[kSentence] = EncodeText(features.sentence, vocab);
  return out;
}

uint32_t CategoryRow(std::string_view name, uint64_t rows) {
  return static_cast<uint32_t>(Fnv1a64(name) % rows);
}

EncodedEntity EncodeEntity(const EntityFeatures &features, const NgramVocabulary &vocab,
                           uint64_t category_rows) {
  EncodedEntity out;
  out.title = EncodeText(features.title, vocab);
  out.paragraph = EncodeText(features.paragraph, vocab);
  for (const std::string &c : features.categories) out.categories.push_back(CategoryRow(c, category_rows));
  return out;
}

}  // namespace entret
