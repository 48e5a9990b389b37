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
#include <vector>

#include "doctest.h"
#include "entret/common.h"
#include "test_util.h"

namespace entret {
namespace {

using testing::CaptureError;
using testing::Contains;
using testing::TempDir;

// Textbook FNV-1a 64, written out independently of the library.
uint64_t ReferenceFnv(const std::string &s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

AnnotatedDocument Doc(size_t n, std::vector<TokenRange> sentences = {}) {
  AnnotatedDocument doc;
  doc.doc_id = "doc";
  for (size_t i = 0; i < n; ++i) doc.tokens.push_back("t" + std::to_string(i));
  if (sentences.empty()) sentences = {{0, static_cast<uint32_t>(n)}};
  doc.sentences = std::move(sentences);
  return doc;
}

TEST_CASE("tokenize") {
  CHECK(Tokenize("").empty());
  CHECK(Tokenize("The Cat, sat.") == TokenList{"the", "cat", "sat"});
  CHECK(Tokenize("AC Milan's forward") == TokenList{"ac", "milan's", "forward"});
  CHECK(Tokenize("  ... -- !! ").empty());
  CHECK(Tokenize("a\tb\nc") == TokenList{"a", "b", "c"});
}

TEST_CASE("extract ngrams") {
  Ngrams one = ExtractNgrams({"a"});
  CHECK(one.unigrams == TokenList{"a"});
  CHECK(one.bigrams.empty());
  Ngrams three = ExtractNgrams({"the", "cat", "sat"});
  CHECK(three.unigrams == TokenList{"the", "cat", "sat"});
  CHECK(three.bigrams == std::vector<Bigram>{{"the", "cat"}, {"cat", "sat"}});
  Ngrams none = ExtractNgrams({});
  CHECK(none.unigrams.empty());
  CHECK(none.bigrams.empty());
}

TEST_CASE("bigram count is one less than the token count") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    TokenList t(rng.Below(20));
    for (auto &s : t) s = "w" + std::to_string(rng.Below(4));
    Ngrams g = ExtractNgrams(t);
    CHECK(g.unigrams == t);
    CHECK(g.bigrams.size() == (t.empty() ? 0 : t.size() - 1));
  }
}

TEST_CASE("fnv matches the reference") {
  for (std::string s : {"", "a", "foobar", "zzyzx", "the cat"}) CHECK(Fnv1a64(s) == ReferenceFnv(s));
  CHECK(Fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(Fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("ngram ids") {
  NgramVocabulary vocab(8);
  CHECK(vocab.size() == 2);
  CHECK(vocab.Id(kPadToken) == kPadId);
  CHECK(vocab.Id(kMentionToken) == kMentionId);
  for (int i = 0; vocab.size() < 17; ++i) vocab.Add("filler" + std::to_string(i));
  CHECK(vocab.Add("the") == 17);
  CHECK(vocab.Add("the") == 17);
  CHECK(vocab.Id("the") == 17);

  const uint32_t n = vocab.size();
  CHECK(vocab.Id("zzyzx") == n + ReferenceFnv("zzyzx") % 8);
  uint32_t first = vocab.Id("foo", "bar");
  CHECK(first == vocab.Id("foo", "bar"));
  CHECK(first >= n);
  CHECK(first < n + 8);
  CHECK(first == n + ReferenceFnv("foo bar") % 8);
  CHECK(vocab.rows() == n + 8);
}

TEST_CASE("ngram ids are range-bounded") {
  NgramVocabulary vocab(97);
  vocab.Add("a");
  vocab.Add("b c");
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::string s = "x" + std::to_string(rng.Next());
    uint32_t id = vocab.Id(s);
    if (vocab.Contains(s)) continue;
    CHECK(id >= vocab.size());
    CHECK(id < vocab.rows());
  }
  CHECK(vocab.Id("b", "c") == 3);
}

TEST_CASE("mention features in the middle of a document") {
  AnnotatedDocument doc = Doc(12);
  MentionFeatures f = BuildMentionFeatures(doc, {5, 6, "Q"});
  CHECK(f.span.tokens == TokenList{"t5"});
  CHECK(f.left_context.tokens == TokenList{"t0", "t1", "t2", "t3", "t4"});
  CHECK(f.right_context.tokens == TokenList{"t6", "t7", "t8", "t9", "t10"});
}

TEST_CASE("mention features pad at the document edge") {
  AnnotatedDocument doc = Doc(3);
  MentionFeatures f = BuildMentionFeatures(doc, {0, 1, "Q"});
  CHECK(f.left_context.tokens == TokenList(5, std::string(kPadToken)));
  CHECK(f.right_context.tokens ==
        TokenList{"t1", "t2", std::string(kPadToken), std::string(kPadToken), std::string(kPadToken)});
}

TEST_CASE("sentence feature replaces the span with one placeholder") {
  AnnotatedDocument doc;
  doc.doc_id = "costa";
  doc.tokens = {"costa", "has", "not", "played"};
  doc.sentences = {{0, 4}};
  MentionFeatures f = BuildMentionFeatures(doc, {0, 1, "Q"});
  CHECK(f.sentence.tokens == TokenList{"<mention>", "has", "not", "played"});
}

TEST_CASE("context windows ignore sentence boundaries") {
  AnnotatedDocument doc = Doc(10, {{0, 4}, {4, 10}});
  MentionFeatures f = BuildMentionFeatures(doc, {4, 6, "Q"});
  CHECK(f.left_context.tokens.back() == "t3");
  CHECK(f.sentence.tokens == TokenList{"<mention>", "t6", "t7", "t8", "t9"});
}

TEST_CASE("mention feature invariants hold on random anchors") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const uint32_t n = 1 + static_cast<uint32_t>(rng.Below(30));
    AnnotatedDocument doc = Doc(n);
    uint32_t start = static_cast<uint32_t>(rng.Below(n));
    uint32_t end = start + 1 + static_cast<uint32_t>(rng.Below(n - start));
    MentionFeatures f = BuildMentionFeatures(doc, {start, end, "Q"});
    CHECK(f.left_context.tokens.size() == kContextWidth);
    CHECK(f.right_context.tokens.size() == kContextWidth);
    CHECK(std::count(f.sentence.tokens.begin(), f.sentence.tokens.end(), kMentionToken) == 1);
    CHECK(f.span.tokens.size() == end - start);
    CHECK(f.sentence.tokens.size() == n - (end - start) + 1);
  }
}

TEST_CASE("invalid anchors are rejected") {
  AnnotatedDocument doc = Doc(7, {{0, 3}, {3, 7}});
  CHECK(Contains(CaptureError([&] { BuildMentionFeatures(doc, {6, 9, "Q"}); }).what(), "out of range"));
  CHECK(Contains(CaptureError([&] { BuildMentionFeatures(doc, {2, 4, "Q"}); }).what(), "single sentence"));
  CHECK(CaptureError([&] { BuildMentionFeatures(doc, {3, 3, "Q"}); }).kind() == ErrorKind::kData);
}

TEST_CASE("entity features") {
  EntityFeatures f = BuildEntityFeatures({"Q1", "Jorge Costa", "", {}});
  CHECK(f.title.tokens == TokenList{"jorge", "costa"});
  CHECK(f.paragraph.tokens.empty());
  CHECK(f.categories.empty());
  EntityRecord r{"Q2", "X", "y z", {"Portuguese footballers"}};
  EntityFeatures g = BuildEntityFeatures(r);
  CHECK(g.categories == std::vector<std::string>{"Portuguese footballers"});
  CHECK(g == BuildEntityFeatures(r));
}

TEST_CASE("vocabulary selection") {
  std::vector<EntityFeatures> ents = {BuildEntityFeatures({"a", "the cat", "the dog the", {}})};
  NgramVocabulary none = BuildVocabulary({}, ents, 0, 16);
  CHECK(none.size() == 2);
  CHECK(none.Id("the") >= 2);

  NgramVocabulary one = BuildVocabulary({}, ents, 1, 16);
  CHECK(one.Contains("the"));
  CHECK(one.Id("the") == 2);

  std::vector<EntityFeatures> tie = {BuildEntityFeatures({"a", "ab aa", "", {}})};
  // Counts: "ab", "aa" and "ab aa" all once; lexicographic order wins.
  NgramVocabulary t = BuildVocabulary({}, tie, 1, 16);
  CHECK(t.Contains("aa"));
  CHECK(!t.Contains("ab"));
}

TEST_CASE("padding never reaches encoded text") {
  NgramVocabulary vocab(4);
  TextFeature f{{std::string(kPadToken), "a", std::string(kPadToken), "b"}};
  EncodedText e = EncodeText(f, vocab);
  CHECK(e.unigrams.size() == 2);
  CHECK(e.bigrams.size() == 1);
  CHECK(e.bigrams[0] == vocab.Id("a", "b"));
  TextFeature pads{TokenList(5, std::string(kPadToken))};
  CHECK(EncodeText(pads, vocab).unigrams.empty());
}

TEST_CASE("vocabulary round-trips and rejects corruption") {
  TempDir dir;
  NgramVocabulary vocab(1000);
  vocab.Add("alpha");
  vocab.Add("alpha beta");
  vocab.Save(dir.File("v.bin"));
  NgramVocabulary back = NgramVocabulary::Load(dir.File("v.bin"));
  CHECK(back == vocab);
  CHECK(back.Id("alpha beta") == 3);

  std::vector<uint8_t> bytes = vocab.Serialize();
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "DEERVOC1");
  std::vector<uint8_t> bad = bytes;
  bad[0] = 'X';
  CHECK(CaptureError([&] { NgramVocabulary::Deserialize(bad); }).kind() == ErrorKind::kData);
  std::vector<uint8_t> cut(bytes.begin(), bytes.end() - 3);
  CHECK(CaptureError([&] { NgramVocabulary::Deserialize(cut); }).kind() == ErrorKind::kData);
}

TEST_CASE("category rows are stable and bounded") {
  CHECK(CategoryRow("Portuguese footballers", 1000) == ReferenceFnv("Portuguese footballers") % 1000);
  CHECK(CategoryRow("x", 7) < 7);
}

}  // namespace
}  // namespace entret
