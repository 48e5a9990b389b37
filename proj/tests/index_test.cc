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


#include "entret/index.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "test_util.h"

namespace entret {
namespace {

using testing::CaptureError;
using testing::Contains;
using testing::TempDir;

Matrix<float> RandomMatrix(size_t n, size_t d, uint64_t seed) {
  Rng rng(seed);
  Matrix<float> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.Normal());
  return m;
}

std::vector<std::string> Ids(size_t n) {
  std::vector<std::string> ids;
  for (size_t i = 0; i < n; ++i) ids.push_back("e" + std::to_string(100000 + i));
  return ids;
}

std::vector<float> Row(const Matrix<float> &m, Eigen::Index i) {
  return std::vector<float>(m.row(i).data(), m.row(i).data() + m.cols());
}

// Full sort in double precision, ties by id.
std::vector<uint32_t> ReferenceTop(const VectorStore &s, const std::vector<float> &q, size_t k) {
  double norm = 0;
  for (float v : q) norm += static_cast<double>(v) * v;
  norm = std::sqrt(norm);
  std::vector<double> score(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    double dot = 0;
    for (Eigen::Index c = 0; c < s.dim(); ++c) dot += static_cast<double>(s.vectors(i, c)) * q[c];
    score[i] = dot / norm;
  }
  std::vector<uint32_t> order(s.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return score[a] != score[b] ? score[a] > score[b] : s.ids[a] < s.ids[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

std::vector<uint32_t> Indices(const std::vector<Hit> &hits) {
  std::vector<uint32_t> out;
  for (const Hit &h : hits) out.push_back(h.index);
  return out;
}

double Overlap(const std::vector<Hit> &a, const std::vector<Hit> &b) {
  std::set<uint32_t> sa;
  for (const Hit &h : a) sa.insert(h.index);
  size_t common = 0;
  for (const Hit &h : b) common += sa.count(h.index);
  return b.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(b.size());
}

double Distortion(const Matrix<float> &points, const KMeansResult &r) {
  double total = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - r.centroids.row(r.assignments[i])).cast<double>().squaredNorm();
  }
  return total;
}

TEST_CASE("dot product") {
  std::vector<float> a = {1, 2, 3, 4, 5, 6, 7, 8, 9}, b = {9, 8, 7, 6, 5, 4, 3, 2, 1};
  CHECK(Dot(a.data(), b.data(), a.size()) == 165.0f);
  CHECK(Dot(a.data(), b.data(), 0) == 0.0f);
}

TEST_CASE("k-means saturated case") {
  Matrix<float> pts = RandomMatrix(12, 3, 1);
  KMeansResult r = KMeans(pts, 12, 20, 4);
  CHECK(Distortion(pts, r) == doctest::Approx(0.0));
  std::set<uint32_t> used(r.assignments.begin(), r.assignments.end());
  CHECK(used.size() == 12);
}

TEST_CASE("k-means finds separated blob means") {
  Matrix<float> pts(4, 2);
  pts << 0, 0, 0, 2, 100, 100, 102, 100;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    KMeansResult r = KMeans(pts, 2, 50, seed);
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[2] == r.assignments[3]);
    CHECK(r.assignments[0] != r.assignments[2]);
    Eigen::RowVector2f a = r.centroids.row(r.assignments[0]);
    Eigen::RowVector2f b = r.centroids.row(r.assignments[2]);
    CHECK(a(0) == doctest::Approx(0.0));
    CHECK(a(1) == doctest::Approx(1.0));
    CHECK(b(0) == doctest::Approx(101.0));
    CHECK(b(1) == doctest::Approx(100.0));
  }
}

TEST_CASE("k-means distortion never increases") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Matrix<float> pts = RandomMatrix(500, 4, seed);
    KMeansResult r = KMeans(pts, 12, 40, seed);
    REQUIRE(!r.distortion.empty());
    for (size_t i = 1; i < r.distortion.size(); ++i) {
      CHECK(r.distortion[i] <= r.distortion[i - 1] * (1 + 1e-9));
    }
    CHECK(Distortion(pts, r) == doctest::Approx(r.distortion.back()).epsilon(1e-4));
  }
  CHECK(CaptureError([] { KMeans(RandomMatrix(3, 2, 1), 4, 10, 1); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("brute store normalizes rows") {
  Matrix<float> m(3, 2);
  m << 3, 4, 0, 2, -1, 0;
  VectorStore s = BuildBrute(m, {"a", "b", "c"});
  CHECK(s.size() == 3);
  CHECK(s.vectors(0, 0) == doctest::Approx(0.6));
  for (int i = 0; i < 3; ++i) CHECK(s.vectors.row(i).norm() == doctest::Approx(1.0).epsilon(1e-6));
  VectorStore again = BuildBrute(s.vectors, s.ids);
  CHECK((again.vectors - s.vectors).cwiseAbs().maxCoeff() <= 1e-7f);

  m.row(1).setZero();
  Error e = CaptureError([&] { BuildBrute(m, {"a", "zero-id", "c"}); });
  CHECK(e.kind() == ErrorKind::kData);
  CHECK(Contains(e.what(), "zero-id"));
}

TEST_CASE("brute search examples") {
  Matrix<float> m(3, 3);
  m << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  VectorStore s = BuildBrute(m, {"x", "y", "z"});
  std::vector<float> q = {0, 2, 0};
  std::vector<Hit> hits = SearchBrute(s, q, 10);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].index == 1);
  CHECK(hits[0].score == doctest::Approx(1.0));
  CHECK(hits[1].score == 0.0f);
  CHECK(hits[1].index == 0);  // ties by id
  CHECK(hits[2].index == 2);
  std::vector<float> zero = {0, 0, 0};
  CHECK(SearchBrute(s, zero, 3).empty());
  CHECK(NormalizeQuery(zero).empty());
}

TEST_CASE("brute search matches the full-sort oracle") {
  Matrix<float> m = RandomMatrix(100, 16, 2);
  VectorStore s = BuildBrute(m, Ids(100));
  Matrix<float> queries = RandomMatrix(20, 16, 3);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    CHECK(Indices(SearchBrute(s, q, 10)) == ReferenceTop(s, q, 10));
  }
  std::vector<float> self = Row(s.vectors, 42);
  std::vector<Hit> hits = SearchBrute(s, self, 1);
  CHECK(hits[0].index == 42);
  CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("brute order is total and stable under permutation") {
  Matrix<float> m = RandomMatrix(60, 4, 5);
  for (int i = 0; i < 60; i += 3) m.row(i + 1) = m.row(i);  // duplicated rows tie
  std::vector<std::string> ids = Ids(60);
  VectorStore s = BuildBrute(m, ids);
  std::vector<uint32_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(1);
  rng.Shuffle(perm);
  Matrix<float> pm(60, 4);
  std::vector<std::string> pids(60);
  for (int i = 0; i < 60; ++i) {
    pm.row(i) = m.row(perm[i]);
    pids[i] = ids[perm[i]];
  }
  VectorStore ps = BuildBrute(pm, pids);
  Matrix<float> queries = RandomMatrix(10, 4, 6);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    std::vector<Hit> a = SearchBrute(s, q, 60), b = SearchBrute(ps, q, 60);
    for (size_t r = 1; r < a.size(); ++r) {
      CHECK((a[r - 1].score > a[r].score ||
             (a[r - 1].score == a[r].score && ids[a[r - 1].index] < ids[a[r].index])));
    }
    for (size_t r = 0; r < a.size(); ++r) CHECK(ids[a[r].index] == pids[b[r].index]);
  }
}

TEST_CASE("pq encoding") {
  Codebooks cb;
  cb.subspaces = 2;
  cb.centers = 5;
  cb.sub_dim = 2;
  Rng rng(3);
  for (int s = 0; s < 2; ++s) {
    Matrix<float> c(5, 2);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = static_cast<float>(rng.Normal());
    cb.centroids.push_back(c);
  }
  std::vector<float> v = {cb.centroids[0](3, 0), cb.centroids[0](3, 1), cb.centroids[1](3, 0),
                          cb.centroids[1](3, 1)};
  CHECK(EncodePq(v, cb) == std::vector<uint16_t>{3, 3});

  Codebooks tie = cb;
  tie.centroids[0] << 1, 0, -1, 0, 5, 5, 6, 6, 7, 7;
  std::vector<float> mid = {0, 0, cb.centroids[1](2, 0), cb.centroids[1](2, 1)};
  CHECK(EncodePq(mid, tie)[0] == 0);

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> x(4);
    for (float &f : x) f = static_cast<float>(rng.Normal());
    std::vector<uint16_t> codes = EncodePq(x, cb);
    for (int s = 0; s < 2; ++s) {
      double best = 1e300;
      uint16_t arg = 0;
      for (uint16_t c = 0; c < 5; ++c) {
        double d = 0;
        for (int j = 0; j < 2; ++j) d += std::pow(x[2 * s + j] - cb.centroids[s](c, j), 2);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      CHECK(codes[s] == arg);
    }
  }
  std::vector<float> wrong(3);
  CHECK(CaptureError([&] { EncodePq(wrong, cb); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("quantizer training") {
  VectorStore s = BuildBrute(RandomMatrix(64, 8, 7), Ids(64));
  Codebooks saturated = TrainQuantizer(s, 1, 64, 1);
  for (size_t i = 0; i < 64; ++i) {
    std::vector<float> v = Row(s.vectors, static_cast<Eigen::Index>(i));
    uint16_t c = EncodePq(v, saturated)[0];
    CHECK((saturated.centroids[0].row(c) - s.vectors.row(i)).norm() == doctest::Approx(0.0));
  }

  Codebooks one = TrainQuantizer(s, 2, 1, 1);
  Eigen::RowVectorXf mean = s.vectors.colwise().mean();
  CHECK((one.centroids[0].row(0) - mean.head(4)).norm() < 1e-5f);
  CHECK((one.centroids[1].row(0) - mean.tail(4)).norm() < 1e-5f);

  auto error = [&](const Codebooks &cb) {
    double total = 0;
    for (size_t i = 0; i < s.size(); ++i) {
      std::vector<float> v = Row(s.vectors, static_cast<Eigen::Index>(i));
      std::vector<uint16_t> codes = EncodePq(v, cb);
      for (uint32_t sub = 0; sub < cb.subspaces; ++sub) {
        for (uint32_t j = 0; j < cb.sub_dim; ++j) {
          total += std::pow(v[sub * cb.sub_dim + j] - cb.centroids[sub](codes[sub], j), 2);
        }
      }
    }
    return total;
  };
  CHECK(error(TrainQuantizer(s, 4, 16, 1)) <= error(TrainQuantizer(s, 4, 4, 1)));
  CHECK(CaptureError([&] { TrainQuantizer(s, 3, 4, 1); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("saturated AH reproduces brute force exactly") {
  VectorStore s = BuildBrute(RandomMatrix(256, 16, 8), Ids(256));
  AhIndex ah = BuildAh(s, 1, 256, 2);
  Matrix<float> queries = RandomMatrix(30, 16, 9);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    CHECK(SearchAh(ah, q, 10) == SearchBrute(s, q, 10));
  }
}

TEST_CASE("single-center AH returns the first k by id") {
  VectorStore s = BuildBrute(RandomMatrix(40, 8, 10), Ids(40));
  AhIndex ah = BuildAh(s, 2, 1, 3);
  std::vector<float> q = Row(RandomMatrix(1, 8, 11), 0);
  CHECK(Indices(SearchAh(ah, q, 5)) == std::vector<uint32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("AH codes stay in range and packing round-trips") {
  VectorStore s = BuildBrute(RandomMatrix(100, 12, 12), Ids(100));
  AhIndex ah = BuildAh(s, 3, 16, 1);
  CHECK(ah.codes.size() == 300);
  for (uint16_t c : ah.codes) CHECK(c < 16);
  CHECK(ah.packed.items == 100);
  AhIndex wide = BuildAh(s, 3, 20, 1);
  for (uint16_t c : wide.codes) CHECK(c < 20);
  std::vector<float> q = Row(RandomMatrix(1, 12, 13), 0);
  // The packed 16-center kernel and the generic table scan agree.
  AhIndex unpacked = ah;
  unpacked.packed = PackedCodes();
  std::vector<Hit> a = SearchAh(ah, q, 20), b = SearchAh(unpacked, q, 20);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-3));
  CHECK(Overlap(a, b) >= 0.9);
}

TEST_CASE("AH overlap with brute force on random unit vectors") {
  VectorStore s = BuildBrute(RandomMatrix(10000, 32, 14), Ids(10000));
  AhIndex ah = BuildAh(s, 8, 16, 1);
  Matrix<float> queries = RandomMatrix(100, 32, 15);
  double plain = 0, reordered = 0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    std::vector<Hit> exact = SearchBrute(s, q, 10);
    plain += Overlap(SearchAh(ah, q, 10), exact);
    reordered += Overlap(SearchAh(ah, q, 10, 500), exact);
  }
  plain /= 100;
  reordered /= 100;
  MESSAGE("top-10 overlap: approximate " << plain << ", reordered " << reordered);
  CHECK(plain > 0.1);
  CHECK(reordered >= 0.9);
}

TEST_CASE("tree with one partition collapses to AH") {
  VectorStore s = BuildBrute(RandomMatrix(300, 16, 16), Ids(300));
  TreeAhIndex tree = BuildTreeAh(s, 1, 4, 16, 2);
  AhIndex ah{tree.store, tree.codebooks, tree.codes, PackCodes(tree.codes, tree.codebooks.subspaces)};
  Matrix<float> queries = RandomMatrix(20, 16, 17);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    CHECK(SearchTreeAh(tree, q, 10, 1) == SearchAh(ah, q, 10));
  }
}

TEST_CASE("tree partitions cover the store and full probing equals AH") {
  VectorStore s = BuildBrute(RandomMatrix(2000, 16, 18), Ids(2000));
  TreeAhIndex tree = BuildTreeAh(s, 20, 4, 16, 3);
  std::vector<int> seen(2000, 0);
  for (size_t p = 0; p < tree.members.size(); ++p) {
    for (uint32_t m : tree.members[p]) {
      ++seen[m];
      CHECK(tree.assignments[m] == p);
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  AhIndex ah{tree.store, tree.codebooks, tree.codes, PackCodes(tree.codes, tree.codebooks.subspaces)};
  Matrix<float> queries = RandomMatrix(30, 16, 19);
  double previous = 0;
  std::vector<double> overlap(21, 0);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    std::vector<float> q = Row(queries, i);
    std::vector<Hit> full = SearchTreeAh(tree, q, 50, 20), flat = SearchAh(ah, q, 50);
    std::multiset<float> fs, as;
    for (const Hit &h : full) fs.insert(h.score);
    for (const Hit &h : flat) as.insert(h.score);
    CHECK(fs == as);
    std::vector<Hit> exact = SearchBrute(s, q, 50);
    for (size_t probes : {1, 2, 5, 10, 20}) {
      overlap[probes] += Overlap(SearchTreeAh(tree, q, 50, probes, 200), exact);
    }
  }
  for (size_t probes : {1, 2, 5, 10, 20}) {
    CHECK(overlap[probes] >= previous);
    previous = overlap[probes];
  }
}

TEST_CASE("index parameter defaults") {
  IndexParams p = ResolveIndexParams({}, 10000, 64);
  CHECK(p.kind == "tree");
  CHECK(p.subspaces == 16);
  CHECK(p.centers == 16);
  CHECK(p.partitions == 100);
  CHECK(p.probes == 5);
  IndexParams small = ResolveIndexParams({}, 10, 8);
  CHECK(small.partitions == 4);
  CHECK(small.probes == 1);
  IndexParams bad;
  bad.kind = "graph";
  CHECK(CaptureError([&] { ResolveIndexParams(bad, 10, 8); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("indexes are seeded and survive a round trip") {
  TempDir dir;
  Matrix<float> enc = RandomMatrix(500, 16, 20);
  Matrix<float> queries = RandomMatrix(10, 16, 21);
  for (std::string kind : {"brute", "ah", "tree"}) {
    IndexParams params;
    params.kind = kind;
    params.reorder = kind == "brute" ? 0 : 20;
    RetrievalIndex a = BuildIndex(enc, Ids(500), params, 7);
    RetrievalIndex b = BuildIndex(enc, Ids(500), params, 7);
    CHECK(SerializeIndex(a) == SerializeIndex(b));
    CHECK(a.kind() == kind);
    SaveIndex(a, dir.File(kind + ".bin"));
    RetrievalIndex c = LoadIndex(dir.File(kind + ".bin"));
    CHECK(c.kind() == kind);
    CHECK(SerializeIndex(c) == SerializeIndex(a));
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      std::vector<float> q = Row(queries, i);
      CHECK(c.Search(q, 10) == a.Search(q, 10));
    }
    std::vector<uint8_t> bytes = SerializeIndex(a);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "DEERIDX1");
    std::vector<uint8_t> flipped = bytes;
    flipped[bytes.size() / 2] ^= 1;
    CHECK(CaptureError([&] { DeserializeIndex(flipped); }).kind() == ErrorKind::kData);
    std::vector<uint8_t> magic = bytes;
    magic[0] = 'X';
    CHECK(CaptureError([&] { DeserializeIndex(magic); }).kind() == ErrorKind::kData);
  }
}

}  // namespace
}  // namespace entret
