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

#include "entret/model.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace entret {

namespace {

constexpr std::string_view kModelMagic = "DEERMDL1";
constexpr uint32_t kModelVersion = 1;
constexpr Eigen::Index kEncodeChunk = 256;

template <typename T>
double CosineImpl(std::span<const T> u, std::span<const T> v, bool *degenerate) {
  if (u.size() != v.size()) UsageError("cosine: width mismatch");
  double dot = 0, uu = 0, vv = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += double(u[i]) * v[i];
    uu += double(u[i]) * u[i];
    vv += double(v[i]) * v[i];
  }
  double nu = std::sqrt(uu), nv = std::sqrt(vv);
  bool bad = nu < kDegenerateNorm || nv < kDegenerateNorm;
  if (degenerate != nullptr) *degenerate = bad;
  if (bad) return 0.0;
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

}  // namespace

const char *TextKindName(TextKind kind) {
  switch (kind) {
    case kSpanText: return "span";
    case kLeftText: return "left";
    case kRightText: return "right";
    case kSentenceText: return "sentence";
    case kTitleText: return "title";
    case kParagraphText: return "paragraph";
    default: return "unknown";
  }
}

uint64_t ParameterCount(const ModelDims &dims) {
  const uint64_t e = dims.embed_dim, d = dims.encode_dim;
  uint64_t tables = 2 * dims.vocab_rows * e + dims.category_rows * e;
  uint64_t text = kNumTextKinds * (2 * e * d + d);
  uint64_t category = e * d + d;
  uint64_t combiners = (3 * d * d + d) + 3 * (2 * d * d + d);
  return tables + text + category + combiners + 3;
}

double Cosine(std::span<const float> u, std::span<const float> v, bool *degenerate) {
  return CosineImpl(u, v, degenerate);
}

double Cosine(std::span<const double> u, std::span<const double> v, bool *degenerate) {
  return CosineImpl(u, v, degenerate);
}

Matrix<float> EncodeMentions(const Params<float> &p, std::span<const EncodedMention> mentions) {
  const Eigen::Index n = static_cast<Eigen::Index>(mentions.size());
  Matrix<float> out(n, p.dims.encode_dim);
  MentionTower<float> tower;
  std::vector<const EncodedMention *> chunk;
  for (Eigen::Index begin = 0; begin < n; begin += kEncodeChunk) {
    Eigen::Index end = std::min(n, begin + kEncodeChunk);
    chunk.clear();
    for (Eigen::Index i = begin; i < end; ++i) chunk.push_back(&mentions[i]);
    tower.Forward(p, chunk);
    out.middleRows(begin, end - begin) = tower.encodings();
  }
  return out;
}

Matrix<float> EncodeEntities(const Params<float> &p, std::span<const EncodedEntity> entities) {
  const Eigen::Index n = static_cast<Eigen::Index>(entities.size());
  Matrix<float> out(n, p.dims.encode_dim);
  EntityTower<float> tower;
  std::vector<const EncodedEntity *> chunk;
  for (Eigen::Index begin = 0; begin < n; begin += kEncodeChunk) {
    Eigen::Index end = std::min(n, begin + kEncodeChunk);
    chunk.clear();
    for (Eigen::Index i = begin; i < end; ++i) chunk.push_back(&entities[i]);
    tower.Forward(p, chunk);
    out.middleRows(begin, end - begin) = tower.encodings();
  }
  return out;
}

std::vector<uint8_t> SerializeParams(const Params<float> &params) {
  ByteWriter w;
  w.PutBytes(kModelMagic);
  w.PutU32(kModelVersion);
  w.PutU32(params.dims.embed_dim);
  w.PutU32(params.dims.encode_dim);
  w.PutU32(static_cast<uint32_t>(params.dims.vocab_rows));
  w.PutU32(static_cast<uint32_t>(params.dims.category_rows));
  params.ForEachBlock([&](const std::string &, const float *data, Eigen::Index size) {
    w.PutF32s(std::span<const float>(data, static_cast<size_t>(size)));
  });
  w.PutChecksum();
  return w.data();
}

Params<float> DeserializeParams(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "model");
  if (bytes.size() < kModelMagic.size() ||
      r.GetBytes(kModelMagic.size()) != kModelMagic) {
    DataError("model: version mismatch (bad magic header, expected DEERMDL1)");
  }
  uint32_t version = r.GetU32();
  if (version != kModelVersion) {
    DataError("model: version mismatch (file version " + std::to_string(version) + ", expected " +
              std::to_string(kModelVersion) + ")");
  }
  ModelDims dims;
  dims.embed_dim = r.GetU32();
  dims.encode_dim = r.GetU32();
  dims.vocab_rows = r.GetU32();
  dims.category_rows = r.GetU32();
  if (dims.embed_dim == 0 || dims.encode_dim == 0 || dims.vocab_rows == 0 || dims.category_rows == 0) {
    DataError("model: invalid dimensions in header");
  }
  // Size check before allocating anything.
  r.Require(4 * ParameterCount(dims) + 4);
  Params<float> p = Params<float>::Zeros(dims);
  p.ForEachBlock([&](const std::string &, float *data, Eigen::Index size) {
    r.GetF32s(std::span<float>(data, static_cast<size_t>(size)));
  });
  r.VerifyChecksum();
  return p;
}

void SaveParams(const Params<float> &params, const std::string &path) {
  WriteFileBytes(path, SerializeParams(params));
}

Params<float> LoadParams(const std::string &path) { return DeserializeParams(ReadFileBytes(path)); }

size_t ImportTextEmbeddings(const std::string &path, const NgramVocabulary &vocab,
                            Params<float> &params) {
  std::ifstream in(path);
  if (!in) DataError("cannot open " + path);
  const Eigen::Index e = params.dims.embed_dim;
  std::string line;
  size_t filled = 0, line_no = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    if (!vocab.Contains(token) || token == kPadToken || token == kMentionToken) continue;
    values.clear();
    float v;
    while (ss >> v) values.push_back(v);
    if (static_cast<Eigen::Index>(values.size()) != e) {
      DataError(path + ": line " + std::to_string(line_no) + " has " +
                std::to_string(values.size()) + " values, expected " + std::to_string(e));
    }
    uint32_t row = vocab.Id(token);
    for (Eigen::Index c = 0; c < e; ++c) params.unigram(row, c) = values[c];
    ++filled;
  }
  return filled;
}

}  // namespace entret
