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

#include "entret/corpus.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "entret/common.h"
#include "json.hpp"

namespace entret {

using nlohmann::ordered_json;

namespace {

std::string ReadText(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(line_number, line) for every non-blank line.
template <typename Fn>
void ForEachLine(std::string_view text, Fn &&fn) {
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    fn(line_no, line);
  }
}

ordered_json ParseLine(std::string_view line, size_t line_no, const char *what) {
  try {
    return ordered_json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    DataError(std::string(what) + ": parse error at line " + std::to_string(line_no) + ": " +
              e.what());
  }
}

template <typename T>
T Field(const ordered_json &obj, const char *key, size_t line_no, const char *what) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    DataError(std::string(what) + ": parse error at line " + std::to_string(line_no) +
              ": field '" + key + "': " + e.what());
  }
}

// Pronounceable pseudo-words; distinct indices give distinct words.
std::string PseudoWord(std::string_view prefix, uint32_t index) {
  static constexpr std::array<std::string_view, 20> kSyllables = {
      "ba", "ko", "ri", "ne", "lu", "ta", "mo", "si", "de", "fa",
      "gu", "hi", "jo", "ke", "ly", "po", "ru", "sa", "ti", "vo"};
  std::string word(prefix);
  do {
    word += kSyllables[index % kSyllables.size()];
    index /= kSyllables.size();
  } while (index > 0);
  return word;
}

constexpr std::array<std::string_view, 24> kFiller = {
    "the",    "of",   "and",   "in",     "was",   "to",     "a",      "with",
    "after",  "his",  "her",   "during", "season", "later", "first",  "new",
    "played", "team", "years", "when",   "also",  "which",  "former", "said"};

}  // namespace

void EntityCatalog::Add(EntityRecord record) {
  if (record.id.empty()) DataError("entity with empty id");
  if (record.title.empty()) DataError("entity " + record.id + " has an empty title");
  auto [it, inserted] = index_.emplace(record.id, records_.size());
  if (!inserted) DataError("duplicate entity id: " + record.id);
  records_.push_back(std::move(record));
}

std::optional<size_t> EntityCatalog::Find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t EntityCatalog::IndexOf(std::string_view id) const {
  auto found = Find(id);
  if (!found) DataError("unknown entity id: " + std::string(id));
  return *found;
}

EntityCatalog ParseEntities(std::string_view text) {
  EntityCatalog catalog;
  ForEachLine(text, [&](size_t line_no, std::string_view line) {
    ordered_json obj = ParseLine(line, line_no, "kb");
    EntityRecord r;
    r.id = Field<std::string>(obj, "id", line_no, "kb");
    r.title = Field<std::string>(obj, "title", line_no, "kb");
    r.paragraph = obj.contains("paragraph") ? Field<std::string>(obj, "paragraph", line_no, "kb")
                                            : std::string();
    if (obj.contains("categories")) {
      r.categories = Field<std::vector<std::string>>(obj, "categories", line_no, "kb");
    }
    if (r.id.empty()) DataError("kb: parse error at line " + std::to_string(line_no) + ": empty id");
    if (r.title.empty()) {
      DataError("kb: parse error at line " + std::to_string(line_no) + ": empty title");
    }
    catalog.Add(std::move(r));
  });
  return catalog;
}

EntityCatalog LoadEntities(const std::string &path) { return ParseEntities(ReadText(path)); }

std::string FormatEntities(const EntityCatalog &catalog) {
  std::string out;
  for (const EntityRecord &r : catalog.records()) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["title"] = r.title;
    obj["paragraph"] = r.paragraph;
    obj["categories"] = r.categories;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void WriteEntities(const EntityCatalog &catalog, const std::string &path) {
  WriteTextFile(path, FormatEntities(catalog));
}

void ValidateDocument(const AnnotatedDocument &doc) {
  const size_t n = doc.tokens.size();
  for (const TokenRange &s : doc.sentences) {
    if (s.begin > s.end || s.end > n) {
      DataError("document " + doc.doc_id + ": sentence [" + std::to_string(s.begin) + "," +
                std::to_string(s.end) + ") out of range");
    }
  }
  for (const Anchor &a : doc.anchors) {
    if (a.start >= a.end || a.end > n) {
      DataError("document " + doc.doc_id + ": anchor [" + std::to_string(a.start) + "," +
                std::to_string(a.end) + ") out of range for " + std::to_string(n) + " tokens");
    }
    bool contained = std::any_of(doc.sentences.begin(), doc.sentences.end(), [&](const TokenRange &s) {
      return s.begin <= a.start && a.end <= s.end;
    });
    if (!contained) {
      DataError("document " + doc.doc_id + ": anchor [" + std::to_string(a.start) + "," +
                std::to_string(a.end) + ") is not contained in a single sentence");
    }
  }
}

std::vector<AnnotatedDocument> ParseDocuments(std::string_view text) {
  std::vector<AnnotatedDocument> docs;
  ForEachLine(text, [&](size_t line_no, std::string_view line) {
    ordered_json obj = ParseLine(line, line_no, "documents");
    AnnotatedDocument doc;
    doc.doc_id = Field<std::string>(obj, "doc_id", line_no, "documents");
    doc.tokens = Field<std::vector<std::string>>(obj, "tokens", line_no, "documents");
    for (const auto &s : Field<std::vector<std::array<uint32_t, 2>>>(obj, "sentences", line_no,
                                                                      "documents")) {
      doc.sentences.push_back({s[0], s[1]});
    }
    const ordered_json &anchors = obj.contains("anchors") ? obj["anchors"] : ordered_json::array();
    if (!anchors.is_array()) {
      DataError("documents: parse error at line " + std::to_string(line_no) + ": anchors");
    }
    for (const auto &a : anchors) {
      if (!a.is_array() || a.size() != 3 || !a[0].is_number_unsigned() ||
          !a[1].is_number_unsigned() || !a[2].is_string()) {
        DataError("documents: parse error at line " + std::to_string(line_no) +
                  ": anchors must be [start, end, entity_id]");
      }
      doc.anchors.push_back({a[0].get<uint32_t>(), a[1].get<uint32_t>(), a[2].get<std::string>()});
    }
    ValidateDocument(doc);
    docs.push_back(std::move(doc));
  });
  return docs;
}

std::vector<AnnotatedDocument> LoadDocuments(const std::string &path) {
  return ParseDocuments(ReadText(path));
}

std::string FormatDocuments(const std::vector<AnnotatedDocument> &docs) {
  std::string out;
  for (const AnnotatedDocument &d : docs) {
    ordered_json obj;
    obj["doc_id"] = d.doc_id;
    obj["tokens"] = d.tokens;
    ordered_json sentences = ordered_json::array();
    for (const TokenRange &s : d.sentences) sentences.push_back({s.begin, s.end});
    obj["sentences"] = sentences;
    ordered_json anchors = ordered_json::array();
    for (const Anchor &a : d.anchors) anchors.push_back({a.start, a.end, a.entity_id});
    obj["anchors"] = anchors;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void WriteDocuments(const std::vector<AnnotatedDocument> &docs, const std::string &path) {
  WriteTextFile(path, FormatDocuments(docs));
}

std::vector<MentionExample> ExtractMentions(const std::vector<AnnotatedDocument> &docs,
                                            const EntityCatalog &catalog) {
  std::vector<MentionExample> out;
  for (const AnnotatedDocument &doc : docs) {
    for (size_t i = 0; i < doc.anchors.size(); ++i) {
      const Anchor &a = doc.anchors[i];
      if (!catalog.Find(a.entity_id)) {
        DataError("document " + doc.doc_id + ": anchor links unknown entity " + a.entity_id);
      }
      out.push_back({doc.doc_id + "#" + std::to_string(i), BuildMentionFeatures(doc, a), a.entity_id});
    }
  }
  return out;
}

CorpusSplit SplitExamples(const std::vector<MentionExample> &examples, double holdout_fraction,
                          uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    UsageError("holdout fraction must be in (0, 1), got " + std::to_string(holdout_fraction));
  }
  if (examples.size() < 2) DataError("need at least 2 examples to split");
  const size_t n = examples.size();
  size_t heldout = static_cast<size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  heldout = std::clamp<size_t>(heldout, 1, n - 1);

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);
  std::vector<bool> is_heldout(n, false);
  for (size_t i = 0; i < heldout; ++i) is_heldout[order[i]] = true;

  CorpusSplit split;
  split.holdout_fraction = holdout_fraction;
  for (size_t i = 0; i < n; ++i) {
    (is_heldout[i] ? split.heldout : split.train).push_back(examples[i]);
  }
  return split;
}

std::vector<std::pair<std::string, std::string>> ParseKeyValues(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  ForEachLine(text, [&](size_t line_no, std::string_view line) {
    size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    auto trim = [](std::string_view s) {
      size_t b = s.find_first_not_of(" \t");
      if (b == std::string_view::npos) return std::string_view();
      size_t e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) return;
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  });
  return out;
}

bool SetSyntheticKey(SyntheticConfig &config, const std::string &key, const std::string &value) {
  if (key == "entities") {
    config.entities = ParseNumber<uint32_t>(key, value);
  } else if (key == "families") {
    config.families = ParseNumber<uint32_t>(key, value);
  } else if (key == "topic_vocab") {
    config.topic_vocab = ParseNumber<uint32_t>(key, value);
  } else if (key == "mentions_per_entity") {
    config.mentions_per_entity = ParseNumber<uint32_t>(key, value);
  } else if (key == "ambiguous_fraction") {
    config.ambiguous_fraction = ParseNumber<double>(key, value);
  } else if (key == "topic_rate") {
    config.topic_rate = ParseNumber<double>(key, value);
  } else if (key == "sentences_per_doc") {
    config.sentences_per_doc = ParseNumber<uint32_t>(key, value);
  } else if (key == "seed") {
    config.seed = ParseNumber<uint64_t>(key, value);
  } else {
    return false;
  }
  return true;
}

SyntheticConfig ParseSyntheticConfig(std::string_view text) {
  SyntheticConfig config;
  for (const auto &[key, value] : ParseKeyValues(text)) {
    if (!SetSyntheticKey(config, key, value)) UsageError("unknown synthetic config key: " + key);
  }
  return config;
}

SyntheticConfig LoadSyntheticConfig(const std::string &path) {
  return ParseSyntheticConfig(ReadText(path));
}

std::string SyntheticSurname(uint32_t family) { return PseudoWord("Vel", family); }
std::string SyntheticFirstName(uint32_t entity) { return PseudoWord("An", entity); }
std::string SyntheticTopicWord(uint32_t entity, uint32_t j) {
  return PseudoWord("x", entity) + "q" + std::to_string(j);
}

SyntheticCorpus GenerateSynthetic(const SyntheticConfig &config, uint64_t seed) {
  if (config.entities == 0) UsageError("synthetic config: entities must be positive");
  if (config.mentions_per_entity == 0) UsageError("synthetic config: mentions_per_entity must be positive");
  if (config.families == 0 || config.families > config.entities) {
    UsageError("synthetic config: families must be in [1, entities]");
  }
  if (config.topic_vocab == 0) UsageError("synthetic config: topic_vocab must be positive");
  if (config.sentences_per_doc == 0) UsageError("synthetic config: sentences_per_doc must be positive");
  if (config.ambiguous_fraction < 0 || config.ambiguous_fraction > 1 || config.topic_rate < 0 ||
      config.topic_rate > 1) {
    UsageError("synthetic config: fractions must be in [0, 1]");
  }

  Rng rng(seed);
  SyntheticCorpus corpus;
  auto lower = [](std::string s) {
    for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  auto filler = [&]() { return std::string(kFiller[rng.Below(kFiller.size())]); };
  auto topic = [&](uint32_t e) { return lower(SyntheticTopicWord(e, rng.Below(config.topic_vocab))); };

  const uint32_t groups = std::max<uint32_t>(1, config.entities / 10);
  for (uint32_t e = 0; e < config.entities; ++e) {
    EntityRecord r;
    r.id = "Q" + std::to_string(e + 1);
    std::string first = SyntheticFirstName(e);
    std::string surname = SyntheticSurname(e % config.families);
    r.title = first + " " + surname;
    std::vector<std::string> words;
    for (uint32_t j = 0; j < config.topic_vocab; ++j) words.push_back(SyntheticTopicWord(e, j));
    rng.Shuffle(words);
    r.paragraph = first + " " + surname + " is a " + filler() + " " + filler();
    for (const std::string &w : words) r.paragraph += " " + w;
    r.paragraph += ".";
    r.categories.push_back("Group " + std::to_string(e % groups));
    corpus.catalog.Add(std::move(r));
  }

  // (entity, sentence tokens, span start, span end) for every mention.
  struct Sentence {
    uint32_t entity;
    std::vector<std::string> tokens;
    uint32_t start, end;
  };
  std::vector<Sentence> sentences;
  for (uint32_t e = 0; e < config.entities; ++e) {
    const std::string first = lower(SyntheticFirstName(e));
    const std::string surname = lower(SyntheticSurname(e % config.families));
    for (uint32_t m = 0; m < config.mentions_per_entity; ++m) {
      Sentence s;
      s.entity = e;
      auto context_token = [&]() { return rng.Uniform() < config.topic_rate ? topic(e) : filler(); };
      size_t left = 4 + rng.Below(4);
      size_t right = 4 + rng.Below(4);
      for (size_t i = 0; i < left; ++i) s.tokens.push_back(context_token());
      s.start = static_cast<uint32_t>(s.tokens.size());
      if (rng.Uniform() >= config.ambiguous_fraction) s.tokens.push_back(first);
      s.tokens.push_back(surname);
      s.end = static_cast<uint32_t>(s.tokens.size());
      for (size_t i = 0; i < right; ++i) s.tokens.push_back(context_token());
      sentences.push_back(std::move(s));
    }
  }
  rng.Shuffle(sentences);

  for (size_t begin = 0; begin < sentences.size(); begin += config.sentences_per_doc) {
    AnnotatedDocument doc;
    char id[32];
    std::snprintf(id, sizeof(id), "D%05zu", begin / config.sentences_per_doc);
    doc.doc_id = id;
    size_t end = std::min<size_t>(sentences.size(), begin + config.sentences_per_doc);
    for (size_t i = begin; i < end; ++i) {
      const Sentence &s = sentences[i];
      uint32_t offset = static_cast<uint32_t>(doc.tokens.size());
      doc.tokens.insert(doc.tokens.end(), s.tokens.begin(), s.tokens.end());
      doc.sentences.push_back({offset, static_cast<uint32_t>(doc.tokens.size())});
      doc.anchors.push_back({offset + s.start, offset + s.end, "Q" + std::to_string(s.entity + 1)});
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace entret
