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

// Nearest-neighbor search over entity encodings: exact brute force, product
// quantization with asymmetric (exact query) scoring, and a two-stage
// partition tree over the quantized codes.

#ifndef ENTRET_INDEX_H_
#define ENTRET_INDEX_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "entret/model.h"

namespace entret {

// Dot product with a fixed summation order shared by every scorer, so
// exact and saturated-quantizer scores agree bit for bit.
float Dot(const float *a, const float *b, size_t n);

struct Hit {
  uint32_t index = 0;  // row in the store
  float score = 0;

  bool operator==(const Hit &) const = default;
};

struct KMeansResult {
  Matrix<float> centroids;
  std::vector<uint32_t> assignments;
  std::vector<double> distortion;  // after each iteration
};

// k-means++ seeding and Lloyd iterations until the assignment stops changing
// or max_iters. Empty clusters are reseeded from the point farthest from its
// centroid.
KMeansResult KMeans(const Matrix<float> &points, size_t k, size_t max_iters, uint64_t seed);

// Unit-normalized rows with their ids.
struct VectorStore {
  Matrix<float> vectors;
  std::vector<std::string> ids;
  std::vector<uint32_t> id_rank;  // tie-break order (ascending id)

  size_t size() const { return ids.size(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

// Throws a data error naming the id of any zero row.
VectorStore BuildBrute(const Matrix<float> &encodings, std::vector<std::string> ids);

// Unit copy of a query; empty if the query is degenerate.
std::vector<float> NormalizeQuery(std::span<const float> query);

// Exact top k by cosine, score descending then id ascending. A degenerate
// query returns no hits.
std::vector<Hit> SearchBrute(const VectorStore &store, std::span<const float> query, size_t k);

struct Codebooks {
  uint32_t subspaces = 0;
  uint32_t centers = 0;
  uint32_t sub_dim = 0;
  std::vector<Matrix<float>> centroids;  // one centers x sub_dim per subspace
};

Codebooks TrainQuantizer(const VectorStore &store, uint32_t subspaces, uint32_t centers,
                         uint64_t seed, size_t max_iters = 25);

// Nearest centroid per subspace by Euclidean distance, ties to the lower
// index.
std::vector<uint16_t> EncodePq(std::span<const float> vector, const Codebooks &codebooks);

// 4-bit codes interleaved in blocks of 32 items for in-register lookup.
struct PackedCodes {
  uint32_t items = 0;
  uint32_t subspaces = 0;  // padded to even
  std::vector<uint8_t> bytes;
};
PackedCodes PackCodes(std::span<const uint16_t> codes, uint32_t subspaces);

struct AhIndex {
  VectorStore store;
  Codebooks codebooks;
  std::vector<uint16_t> codes;  // N x S
  PackedCodes packed;           // filled when centers == 16
};

AhIndex BuildAh(VectorStore store, uint32_t subspaces, uint32_t centers, uint64_t seed);

// Asymmetric scoring against a per-query lookup table. With reorder == 0
// the ranking is by approximate score; otherwise the best 'reorder'
// approximate candidates are rescored exactly.
std::vector<Hit> SearchAh(const AhIndex &index, std::span<const float> query, size_t k,
                          size_t reorder = 0);

struct TreeAhIndex {
  VectorStore store;
  Codebooks codebooks;
  std::vector<uint16_t> codes;  // N x S, shared codebooks
  Matrix<float> partition_centroids;
  std::vector<uint32_t> assignments;
  std::vector<std::vector<uint32_t>> members;
  std::vector<PackedCodes> packed;  // per partition when centers == 16
};

TreeAhIndex BuildTreeAh(VectorStore store, uint32_t partitions, uint32_t subspaces, uint32_t centers,
                        uint64_t seed);

std::vector<Hit> SearchTreeAh(const TreeAhIndex &index, std::span<const float> query, size_t k,
                              size_t probes, size_t reorder = 0);

struct IndexParams {
  std::string kind = "tree";  // brute | ah | tree
  uint32_t subspaces = 0;     // 0: D / 4
  uint32_t centers = 16;
  uint32_t partitions = 0;    // 0: ceil(sqrt(N))
  uint32_t probes = 0;        // 0: max(1, P / 20)
  uint32_t reorder = 0;
};

// Fills defaults for a store of n rows and width d.
IndexParams ResolveIndexParams(IndexParams params, size_t n, size_t d);

// Any of the three index kinds plus its search defaults.
struct RetrievalIndex {
  std::variant<VectorStore, AhIndex, TreeAhIndex> impl;
  IndexParams params;

  const VectorStore &store() const;
  std::string kind() const;
  std::vector<Hit> Search(std::span<const float> query, size_t k) const;
};

RetrievalIndex BuildIndex(const Matrix<float> &encodings, std::vector<std::string> ids,
                          const IndexParams &params, uint64_t seed);

// File: "DEERIDX1", kind tag, N, D, S, C, P, probes, reorder, ids, f32
// store, f32 codebooks, u8 (C <= 256) or u16 codes, partition centroids and
// assignments, CRC-32C.
std::vector<uint8_t> SerializeIndex(const RetrievalIndex &index);
RetrievalIndex DeserializeIndex(std::span<const uint8_t> bytes);
void SaveIndex(const RetrievalIndex &index, const std::string &path);
RetrievalIndex LoadIndex(const std::string &path);

}  // namespace entret

#endif  // ENTRET_INDEX_H_
