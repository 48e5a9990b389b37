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
#include <queue>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define ENTRET_HAVE_X86 1
#endif

namespace entret {

namespace {

constexpr std::string_view kIndexMagic = "DEERIDX1";
constexpr uint32_t kFastScanCenters = 16;
constexpr size_t kBlock = 32;
constexpr size_t kKMeansIters = 25;
constexpr size_t kPartitionSamplePerCenter = 64;

#ifdef ENTRET_HAVE_X86
bool HasAvx2() {
  static const bool has = __builtin_cpu_supports("avx2");
  return has;
}
#endif

// Keeps the best k hits under (score desc, id rank asc).
class TopK {
 public:
  TopK(size_t k, const std::vector<uint32_t> &rank) : k_(k), rank_(rank), heap_(Cmp{&rank}) {}

  void Offer(uint32_t index, float score) {
    if (k_ == 0) return;
    Hit h{index, score};
    if (heap_.size() < k_) {
      heap_.push(h);
    } else if (Cmp{&rank_}(h, heap_.top())) {
      heap_.pop();
      heap_.push(h);
    }
  }

  std::vector<Hit> Take() {
    std::vector<Hit> out(heap_.size());
    for (size_t i = out.size(); i > 0; --i) {
      out[i - 1] = heap_.top();
      heap_.pop();
    }
    return out;
  }

 private:
  struct Cmp {
    const std::vector<uint32_t> *rank;
    bool operator()(const Hit &a, const Hit &b) const {
      if (a.score != b.score) return a.score > b.score;
      return (*rank)[a.index] < (*rank)[b.index];
    }
  };
  size_t k_;
  const std::vector<uint32_t> &rank_;
  std::priority_queue<Hit, std::vector<Hit>, Cmp> heap_;
};

std::vector<uint32_t> RankIds(const std::vector<std::string> &ids) {
  std::vector<uint32_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return ids[a] < ids[b]; });
  std::vector<uint32_t> rank(ids.size());
  for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<uint32_t>(r);
  return rank;
}

// Row-wise argmin of squared Euclidean distance, ties to the lower column.
std::vector<uint32_t> AssignNearest(const Matrix<double> &x, const Matrix<double> &c) {
  Vector<double> cc = c.rowwise().squaredNorm();
  Matrix<double> g = x * c.transpose();
  std::vector<uint32_t> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = cc[0] - 2 * g(i, 0);
    for (Eigen::Index j = 1; j < c.rows(); ++j) {
      double d = cc[j] - 2 * g(i, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out[i] = static_cast<uint32_t>(best);
  }
  return out;
}

double Distortion(const Matrix<double> &x, const Matrix<double> &c, const std::vector<uint32_t> &a,
                  std::vector<double> *per_point = nullptr) {
  double total = 0;
  if (per_point != nullptr) per_point->resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double d = (x.row(i) - c.row(a[i])).squaredNorm();
    if (per_point != nullptr) (*per_point)[i] = d;
    total += d;
  }
  return total;
}

// Lookup table of dot(query subspace, centroid), S x C.
std::vector<float> BuildLut(const Codebooks &cb, const std::vector<float> &q) {
  std::vector<float> lut(static_cast<size_t>(cb.subspaces) * cb.centers);
  for (uint32_t s = 0; s < cb.subspaces; ++s) {
    const float *qs = q.data() + static_cast<size_t>(s) * cb.sub_dim;
    for (uint32_t c = 0; c < cb.centers; ++c) {
      lut[static_cast<size_t>(s) * cb.centers + c] = Dot(qs, cb.centroids[s].row(c).data(), cb.sub_dim);
    }
  }
  return lut;
}

float ApproxScore(const std::vector<float> &lut, const uint16_t *codes, uint32_t subspaces,
                  uint32_t centers) {
  float score = 0;
  for (uint32_t s = 0; s < subspaces; ++s) score += lut[static_cast<size_t>(s) * centers + codes[s]];
  return score;
}

// 8-bit version of a 16-center table, padded to 'padded' subspaces. Every
// subspace shares one step so sums stay comparable.
std::vector<uint8_t> QuantizeLut(const std::vector<float> &lut, uint32_t subspaces, uint32_t padded) {
  std::vector<float> lo(subspaces);
  double step = 0;
  for (uint32_t s = 0; s < subspaces; ++s) {
    const float *row = lut.data() + s * kFastScanCenters;
    lo[s] = *std::min_element(row, row + kFastScanCenters);
    float hi = *std::max_element(row, row + kFastScanCenters);
    step = std::max(step, (static_cast<double>(hi) - lo[s]) / 255.0);
  }
  if (!(step > 0)) step = 1;
  std::vector<uint8_t> out(static_cast<size_t>(padded) * kFastScanCenters, 0);
  for (uint32_t s = 0; s < subspaces; ++s) {
    for (uint32_t c = 0; c < kFastScanCenters; ++c) {
      double v = std::round((lut[s * kFastScanCenters + c] - lo[s]) / step);
      out[s * kFastScanCenters + c] = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

// Eight independent lanes, multiply then add (never fused), reduced in a
// fixed tree. The AVX2 variant performs the same operations per lane.
float ReduceLanes(const float *acc) {
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
}

float DotScalar(const float *a, const float *b, size_t n) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (size_t j = 0; j < 8; ++j) {
      float prod = a[i + j] * b[i + j];
      acc[j] += prod;
    }
  }
  for (size_t j = 0; i < n; ++i, ++j) {
    float prod = a[i] * b[i];
    acc[j] += prod;
  }
  return ReduceLanes(acc);
}

// Items that survive an 8-bit score threshold during a scan.
struct Candidates {
  std::vector<uint32_t> rows;
  std::vector<uint16_t> scores;

  void clear() {
    rows.clear();
    scores.clear();
  }
};

// Visits blocks 0, step, 2 step, ... of 'pc' and appends every real item
// whose 8-bit score is >= level. 'rows' maps positions to store rows (null:
// identity).
void ScanAboveScalar(const PackedCodes &pc, const uint8_t *lut, size_t step, uint16_t level,
                     const uint32_t *rows, Candidates *out, uint32_t *hist) {
  const size_t blocks = (pc.items + kBlock - 1) / kBlock;
  const size_t pairs = pc.subspaces / 2;
  for (size_t b = 0; b < blocks; b += step) {
    const uint8_t *base = pc.bytes.data() + b * pairs * kBlock;
    for (size_t i = 0; i < kBlock && b * kBlock + i < pc.items; ++i) {
      uint32_t sum = 0;
      for (size_t s = 0; s < pc.subspaces; ++s) {
        uint8_t byte = base[(s / 2) * kBlock + (s % 2) * 16 + (i % 16)];
        uint8_t code = i < 16 ? (byte & 0x0f) : (byte >> 4);
        sum += lut[s * kFastScanCenters + code];
      }
      if (hist != nullptr) {
        ++hist[sum];
      } else if (sum >= level) {
        uint32_t pos = static_cast<uint32_t>(b * kBlock + i);
        out->rows.push_back(rows != nullptr ? rows[pos] : pos);
        out->scores.push_back(static_cast<uint16_t>(sum));
      }
    }
  }
}

#ifdef ENTRET_HAVE_X86
__attribute__((target("avx2"))) void ScanAboveAvx2(const PackedCodes &pc, const uint8_t *lut,
                                                    size_t step, uint16_t level,
                                                    const uint32_t *rows, Candidates *out,
                                                    uint32_t *hist) {
  const size_t blocks = (pc.items + kBlock - 1) / kBlock;
  const size_t pairs = pc.subspaces / 2;
  __m256i tables[128];
  for (size_t p = 0; p < pairs; ++p) {
    __m128i even = _mm_loadu_si128(reinterpret_cast<const __m128i *>(lut + (2 * p) * 16));
    __m128i odd = _mm_loadu_si128(reinterpret_cast<const __m128i *>(lut + (2 * p + 1) * 16));
    tables[p] = _mm256_set_m128i(odd, even);
  }
  const __m256i low_nibble = _mm256_set1_epi8(0x0f);
  const __m256i low_byte = _mm256_set1_epi16(0x00ff);
  const __m128i threshold = _mm_set1_epi16(static_cast<short>(level));
  alignas(16) uint16_t scores[kBlock];
  for (size_t b = 0; b < blocks; b += step) {
    const uint8_t *base = pc.bytes.data() + b * pairs * kBlock;
    __m256i acc_a = _mm256_setzero_si256(), acc_b = _mm256_setzero_si256();
    __m256i acc_c = _mm256_setzero_si256(), acc_d = _mm256_setzero_si256();
    for (size_t p = 0; p < pairs; ++p) {
      __m256i codes = _mm256_loadu_si256(reinterpret_cast<const __m256i *>(base + p * kBlock));
      __m256i lo = _mm256_and_si256(codes, low_nibble);
      __m256i hi = _mm256_and_si256(_mm256_srli_epi16(codes, 4), low_nibble);
      __m256i rl = _mm256_shuffle_epi8(tables[p], lo);
      __m256i rh = _mm256_shuffle_epi8(tables[p], hi);
      acc_a = _mm256_add_epi16(acc_a, _mm256_and_si256(rl, low_byte));
      acc_b = _mm256_add_epi16(acc_b, _mm256_srli_epi16(rl, 8));
      acc_c = _mm256_add_epi16(acc_c, _mm256_and_si256(rh, low_byte));
      acc_d = _mm256_add_epi16(acc_d, _mm256_srli_epi16(rh, 8));
    }
    // Lane halves hold the even and odd subspaces of the same items.
    __m128i a = _mm_add_epi16(_mm256_castsi256_si128(acc_a), _mm256_extracti128_si256(acc_a, 1));
    __m128i bb = _mm_add_epi16(_mm256_castsi256_si128(acc_b), _mm256_extracti128_si256(acc_b, 1));
    __m128i c = _mm_add_epi16(_mm256_castsi256_si128(acc_c), _mm256_extracti128_si256(acc_c, 1));
    __m128i d = _mm_add_epi16(_mm256_castsi256_si128(acc_d), _mm256_extracti128_si256(acc_d, 1));
    // Unsigned s >= level iff max(s, level) == s.
    __m128i top = _mm_max_epu16(_mm_max_epu16(a, bb), _mm_max_epu16(c, d));
    __m128i any = _mm_cmpeq_epi16(_mm_max_epu16(top, threshold), top);
    if (hist == nullptr && _mm_movemask_epi8(any) == 0) continue;
    __m128i *dst = reinterpret_cast<__m128i *>(scores);
    _mm_store_si128(dst + 0, _mm_unpacklo_epi16(a, bb));
    _mm_store_si128(dst + 1, _mm_unpackhi_epi16(a, bb));
    _mm_store_si128(dst + 2, _mm_unpacklo_epi16(c, d));
    _mm_store_si128(dst + 3, _mm_unpackhi_epi16(c, d));
    const size_t valid = std::min(kBlock, pc.items - b * kBlock);
    if (hist != nullptr) {
      for (size_t i = 0; i < valid; ++i) ++hist[scores[i]];
      continue;
    }
    for (size_t i = 0; i < valid; ++i) {
      if (scores[i] >= level) {
        uint32_t pos = static_cast<uint32_t>(b * kBlock + i);
        out->rows.push_back(rows != nullptr ? rows[pos] : pos);
        out->scores.push_back(scores[i]);
      }
    }
  }
}

__attribute__((target("avx2"))) float DotAvx2(const float *a, const float *b, size_t n) {
  __m256 lanes = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    lanes = _mm256_add_ps(lanes, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  alignas(32) float acc[8];
  _mm256_store_ps(acc, lanes);
  for (size_t j = 0; i < n; ++i, ++j) {
    float prod = a[i] * b[i];
    acc[j] += prod;
  }
  return ReduceLanes(acc);
}
#endif

// With 'hist' set, counts the scores of visited items instead of
// collecting them.
void ScanAbove(const PackedCodes &pc, const std::vector<uint8_t> &lut, size_t step, uint16_t level,
               const uint32_t *rows, Candidates *out, uint32_t *hist = nullptr) {
#ifdef ENTRET_HAVE_X86
  if (HasAvx2()) {
    ScanAboveAvx2(pc, lut.data(), step, level, rows, out, hist);
    return;
  }
#endif
  ScanAboveScalar(pc, lut.data(), step, level, rows, out, hist);
}

bool UseFastScan(const Codebooks &cb, size_t reorder) {
  return reorder > 0 && cb.centers == kFastScanCenters && cb.subspaces <= 256;
}

// Highest level whose count of scores >= level reaches 'want', given a
// histogram over levels.
uint16_t LevelFor(const std::vector<uint32_t> &hist, size_t want) {
  size_t seen = 0;
  for (size_t level = hist.size(); level > 0; --level) {
    seen += hist[level - 1];
    if (seen >= want) return static_cast<uint16_t>(level - 1);
  }
  return 0;
}

// One packed code list and the store rows of its items.
struct ScanPart {
  const PackedCodes *codes;
  const uint32_t *rows;  // null: identity
};

// Candidates are all items whose 8-bit score reaches the highest level that
// admits at least 'want' items; they are rescored exactly. The level is
// estimated on every 8th block, widened until enough items pass, then made
// exact on the survivors, so the set does not depend on item order.
std::vector<Hit> FastScanSearch(const VectorStore &store, const std::vector<float> &q,
                                const std::vector<ScanPart> &parts, const std::vector<uint8_t> &lut,
                                size_t want, size_t k) {
  constexpr size_t kSampleStep = 8;
  thread_local Candidates found;
  thread_local std::vector<uint32_t> hist;
  const uint32_t max_score = static_cast<uint32_t>(lut.size() / kFastScanCenters) * 255u;
  size_t total = 0;
  for (const ScanPart &part : parts) total += part.codes->items;

  found.clear();
  uint16_t level = 0;
  if (total > want) {
    thread_local std::vector<uint32_t> sample;
    sample.assign(static_cast<size_t>(max_score) + 1, 0);
    for (const ScanPart &part : parts) {
      ScanAbove(*part.codes, lut, kSampleStep, 0, part.rows, nullptr, sample.data());
    }
    size_t sampled = 0;
    for (uint32_t c : sample) sampled += c;
    // Aim above the expected count; widen the aim if the full scan falls short.
    for (size_t aim = 2 * want + 8;; aim *= 2) {
      level = LevelFor(sample, (aim * sampled + total - 1) / total);
      for (const ScanPart &part : parts) ScanAbove(*part.codes, lut, 1, level, part.rows, &found);
      if (found.rows.size() >= want || level == 0) break;
      found.clear();
    }
  } else {
    for (const ScanPart &part : parts) ScanAbove(*part.codes, lut, 1, 0, part.rows, &found);
  }
  hist.assign(static_cast<size_t>(max_score) + 1, 0);
  for (uint16_t sc : found.scores) ++hist[sc];
  const uint16_t exact = std::max(level, LevelFor(hist, want));

  thread_local std::vector<uint32_t> rerank;
  rerank.clear();
  for (size_t i = 0; i < found.rows.size(); ++i) {
    if (found.scores[i] >= exact) rerank.push_back(found.rows[i]);
  }
  TopK best(k, store.id_rank);
  const size_t d = static_cast<size_t>(store.dim());
  constexpr size_t kAhead = 8;
  for (size_t i = 0; i < rerank.size(); ++i) {
    if (i + kAhead < rerank.size()) {
      const char *next = reinterpret_cast<const char *>(store.vectors.row(rerank[i + kAhead]).data());
      for (size_t off = 0; off < d * sizeof(float); off += 64) __builtin_prefetch(next + off);
    }
    best.Offer(rerank[i], Dot(q.data(), store.vectors.row(rerank[i]).data(), d));
  }
  return best.Take();
}

// Float lookup-table scoring over 'items', with optional exact rescoring.
std::vector<Hit> ScoreFloat(const VectorStore &store, const Codebooks &cb,
                            const std::vector<uint16_t> &codes, const std::vector<float> &q,
                            const std::vector<float> &lut, std::span<const uint32_t> items, size_t k,
                            size_t reorder) {
  TopK approx(reorder > 0 ? std::max(reorder, k) : k, store.id_rank);
  for (uint32_t i : items) {
    approx.Offer(i, ApproxScore(lut, codes.data() + static_cast<size_t>(i) * cb.subspaces, cb.subspaces,
                                cb.centers));
  }
  std::vector<Hit> hits = approx.Take();
  if (reorder == 0) return hits;
  TopK exact(k, store.id_rank);
  const size_t d = static_cast<size_t>(store.dim());
  for (const Hit &h : hits) exact.Offer(h.index, Dot(q.data(), store.vectors.row(h.index).data(), d));
  return exact.Take();
}

std::vector<uint16_t> EncodeAll(const VectorStore &store, const Codebooks &cb) {
  std::vector<uint16_t> codes;
  codes.reserve(store.size() * cb.subspaces);
  for (size_t i = 0; i < store.size(); ++i) {
    std::vector<uint16_t> c = EncodePq(
        std::span<const float>(store.vectors.row(i).data(), static_cast<size_t>(store.dim())), cb);
    codes.insert(codes.end(), c.begin(), c.end());
  }
  return codes;
}

std::vector<uint16_t> GatherCodes(const std::vector<uint16_t> &codes, uint32_t subspaces,
                                  const std::vector<uint32_t> &rows) {
  std::vector<uint16_t> out;
  out.reserve(rows.size() * subspaces);
  for (uint32_t r : rows) {
    out.insert(out.end(), codes.begin() + static_cast<std::ptrdiff_t>(r) * subspaces,
               codes.begin() + static_cast<std::ptrdiff_t>(r + 1) * subspaces);
  }
  return out;
}

void FinishTree(TreeAhIndex &index) {
  const uint32_t p = static_cast<uint32_t>(index.partition_centroids.rows());
  index.members.assign(p, {});
  for (size_t i = 0; i < index.assignments.size(); ++i) {
    if (index.assignments[i] >= p) DataError("index: partition assignment out of range");
    index.members[index.assignments[i]].push_back(static_cast<uint32_t>(i));
  }
  index.packed.clear();
  if (index.codebooks.centers == kFastScanCenters) {
    for (const auto &m : index.members) {
      index.packed.push_back(PackCodes(GatherCodes(index.codes, index.codebooks.subspaces, m),
                                       index.codebooks.subspaces));
    }
  }
}

}  // namespace

float Dot(const float *a, const float *b, size_t n) {
#ifdef ENTRET_HAVE_X86
  if (HasAvx2()) return DotAvx2(a, b, n);
#endif
  return DotScalar(a, b, n);
}

KMeansResult KMeans(const Matrix<float> &points, size_t k, size_t max_iters, uint64_t seed) {
  const Eigen::Index m = points.rows();
  if (k == 0 || static_cast<size_t>(m) < k) {
    UsageError("kmeans: need 1 <= k <= number of points (k=" + std::to_string(k) +
               ", points=" + std::to_string(m) + ")");
  }
  const Matrix<double> x = points.cast<double>();
  Rng rng(seed);
  Matrix<double> c(static_cast<Eigen::Index>(k), x.cols());
  std::vector<bool> chosen(m, false);
  uint64_t first = rng.Below(static_cast<uint64_t>(m));
  c.row(0) = x.row(first);
  chosen[first] = true;
  std::vector<double> d2(m);
  for (Eigen::Index i = 0; i < m; ++i) d2[i] = (x.row(i) - c.row(0)).squaredNorm();
  for (size_t j = 1; j < k; ++j) {
    double total = 0;
    for (Eigen::Index i = 0; i < m; ++i) total += d2[i];
    Eigen::Index pick = -1;
    if (total > 0) {
      double r = rng.Uniform() * total;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (d2[i] <= 0) continue;
        pick = i;
        r -= d2[i];
        if (r < 0) break;
      }
    } else {
      for (Eigen::Index i = 0; i < m && pick < 0; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    c.row(static_cast<Eigen::Index>(j)) = x.row(pick);
    for (Eigen::Index i = 0; i < m; ++i) d2[i] = std::min(d2[i], (x.row(i) - x.row(pick)).squaredNorm());
  }

  KMeansResult result;
  std::vector<uint32_t> assign = AssignNearest(x, c);
  std::vector<double> cost;
  for (size_t it = 0; it < max_iters; ++it) {
    Matrix<double> sums = Matrix<double>::Zero(c.rows(), c.cols());
    std::vector<size_t> counts(k, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(assign[i]) += x.row(i);
      ++counts[assign[i]];
    }
    for (size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) c.row(j) = sums.row(j) / static_cast<double>(counts[j]);
    }
    // Reseed empty clusters from the worst-served points.
    bool any_empty = std::find(counts.begin(), counts.end(), 0u) != counts.end();
    if (any_empty) {
      Distortion(x, c, assign, &cost);
      for (size_t j = 0; j < k; ++j) {
        if (counts[j] > 0) continue;
        Eigen::Index far = std::max_element(cost.begin(), cost.end()) - cost.begin();
        c.row(j) = x.row(far);
        cost[far] = -1;
      }
    }
    std::vector<uint32_t> next = AssignNearest(x, c);
    bool changed = next != assign || any_empty;
    assign = std::move(next);
    result.distortion.push_back(Distortion(x, c, assign));
    if (!changed) break;
  }
  result.centroids = c.cast<float>();
  result.assignments = std::move(assign);
  return result;
}

VectorStore BuildBrute(const Matrix<float> &encodings, std::vector<std::string> ids) {
  if (static_cast<size_t>(encodings.rows()) != ids.size()) UsageError("index: ids and encodings differ");
  if (ids.empty()) DataError("index: no vectors");
  VectorStore store;
  store.vectors.resize(encodings.rows(), encodings.cols());
  for (Eigen::Index i = 0; i < encodings.rows(); ++i) {
    Vector<double> row = encodings.row(i).cast<double>().transpose();
    double n = row.norm();
    if (!(n >= kDegenerateNorm) || !std::isfinite(n)) DataError("index: zero vector for id " + ids[i]);
    store.vectors.row(i) = (row / n).cast<float>().transpose();
  }
  store.id_rank = RankIds(ids);
  store.ids = std::move(ids);
  return store;
}

std::vector<float> NormalizeQuery(std::span<const float> query) {
  double n = 0;
  for (float v : query) n += static_cast<double>(v) * v;
  n = std::sqrt(n);
  if (!(n >= kDegenerateNorm) || !std::isfinite(n)) return {};
  std::vector<float> out(query.size());
  for (size_t i = 0; i < query.size(); ++i) out[i] = static_cast<float>(query[i] / n);
  return out;
}

std::vector<Hit> SearchBrute(const VectorStore &store, std::span<const float> query, size_t k) {
  if (k == 0) UsageError("search: k must be positive");
  if (static_cast<Eigen::Index>(query.size()) != store.dim()) UsageError("search: query width mismatch");
  std::vector<float> q = NormalizeQuery(query);
  if (q.empty()) return {};
  TopK best(k, store.id_rank);
  const size_t d = q.size();
  for (size_t i = 0; i < store.size(); ++i) {
    best.Offer(static_cast<uint32_t>(i), Dot(q.data(), store.vectors.row(i).data(), d));
  }
  return best.Take();
}

Codebooks TrainQuantizer(const VectorStore &store, uint32_t subspaces, uint32_t centers,
                         uint64_t seed, size_t max_iters) {
  const auto d = static_cast<uint32_t>(store.dim());
  if (subspaces == 0 || d % subspaces != 0) {
    UsageError("quantizer: subspaces (" + std::to_string(subspaces) + ") must divide the dimension (" +
               std::to_string(d) + ")");
  }
  if (centers == 0 || centers > 65535) UsageError("quantizer: centers must be in [1, 65535]");
  if (store.size() < centers) UsageError("quantizer: fewer vectors than centers");
  Codebooks cb;
  cb.subspaces = subspaces;
  cb.centers = centers;
  cb.sub_dim = d / subspaces;
  for (uint32_t s = 0; s < subspaces; ++s) {
    Matrix<float> sub = store.vectors.middleCols(static_cast<Eigen::Index>(s) * cb.sub_dim, cb.sub_dim);
    cb.centroids.push_back(KMeans(sub, centers, max_iters, seed + s).centroids);
  }
  return cb;
}

std::vector<uint16_t> EncodePq(std::span<const float> vector, const Codebooks &cb) {
  if (vector.size() != static_cast<size_t>(cb.subspaces) * cb.sub_dim) UsageError("encode: width mismatch");
  std::vector<uint16_t> codes(cb.subspaces);
  for (uint32_t s = 0; s < cb.subspaces; ++s) {
    const float *v = vector.data() + static_cast<size_t>(s) * cb.sub_dim;
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t c = 0; c < cb.centers; ++c) {
      const float *ctr = cb.centroids[s].row(c).data();
      double dist = 0;
      for (uint32_t j = 0; j < cb.sub_dim; ++j) {
        double diff = static_cast<double>(v[j]) - ctr[j];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        codes[s] = static_cast<uint16_t>(c);
      }
    }
  }
  return codes;
}

PackedCodes PackCodes(std::span<const uint16_t> codes, uint32_t subspaces) {
  PackedCodes pc;
  pc.items = static_cast<uint32_t>(codes.size() / subspaces);
  pc.subspaces = subspaces + (subspaces % 2);
  const size_t blocks = (pc.items + kBlock - 1) / kBlock;
  const size_t pairs = pc.subspaces / 2;
  pc.bytes.assign(blocks * pairs * kBlock, 0);
  for (size_t i = 0; i < pc.items; ++i) {
    const size_t b = i / kBlock, slot = i % kBlock;
    for (size_t s = 0; s < subspaces; ++s) {
      uint8_t code = static_cast<uint8_t>(codes[i * subspaces + s] & 0x0f);
      uint8_t &byte = pc.bytes[b * pairs * kBlock + (s / 2) * kBlock + (s % 2) * 16 + slot % 16];
      byte |= slot < 16 ? code : static_cast<uint8_t>(code << 4);
    }
  }
  return pc;
}

AhIndex BuildAh(VectorStore store, uint32_t subspaces, uint32_t centers, uint64_t seed) {
  AhIndex index;
  index.codebooks = TrainQuantizer(store, subspaces, centers, seed);
  index.codes = EncodeAll(store, index.codebooks);
  if (centers == kFastScanCenters) index.packed = PackCodes(index.codes, subspaces);
  index.store = std::move(store);
  return index;
}

std::vector<Hit> SearchAh(const AhIndex &index, std::span<const float> query, size_t k,
                          size_t reorder) {
  if (k == 0) UsageError("search: k must be positive");
  if (static_cast<Eigen::Index>(query.size()) != index.store.dim()) UsageError("search: query width mismatch");
  std::vector<float> q = NormalizeQuery(query);
  if (q.empty()) return {};
  std::vector<float> lut = BuildLut(index.codebooks, q);
  if (UseFastScan(index.codebooks, reorder) && !index.packed.bytes.empty()) {
    std::vector<uint8_t> qlut = QuantizeLut(lut, index.codebooks.subspaces, index.packed.subspaces);
    return FastScanSearch(index.store, q, {ScanPart{&index.packed, nullptr}}, qlut,
                          std::max(reorder, k), k);
  }
  std::vector<uint32_t> items(index.store.size());
  std::iota(items.begin(), items.end(), 0u);
  return ScoreFloat(index.store, index.codebooks, index.codes, q, lut, items, k, reorder);
}

TreeAhIndex BuildTreeAh(VectorStore store, uint32_t partitions, uint32_t subspaces, uint32_t centers,
                        uint64_t seed) {
  if (partitions == 0) UsageError("tree: partitions must be positive");
  if (partitions > store.size()) UsageError("tree: more partitions than vectors");
  TreeAhIndex index;
  index.codebooks = TrainQuantizer(store, subspaces, centers, seed);
  index.codes = EncodeAll(store, index.codebooks);

  // Partition centers come from a sample; every vector then joins its
  // nearest center.
  const size_t n = store.size();
  const size_t sample_size = std::min(n, kPartitionSamplePerCenter * partitions);
  Matrix<float> sample;
  if (sample_size == n) {
    sample = store.vectors;
  } else {
    std::vector<uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    Rng rng(seed ^ 0x7a3e);
    rng.Shuffle(rows);
    rows.resize(sample_size);
    std::sort(rows.begin(), rows.end());
    sample.resize(static_cast<Eigen::Index>(sample_size), store.dim());
    for (size_t i = 0; i < sample_size; ++i) sample.row(i) = store.vectors.row(rows[i]);
  }
  KMeansResult km = KMeans(sample, partitions, kKMeansIters, seed ^ 0x51ee);
  index.partition_centroids = km.centroids;
  index.assignments = AssignNearest(store.vectors.cast<double>(), km.centroids.cast<double>());
  index.store = std::move(store);
  FinishTree(index);
  return index;
}

std::vector<Hit> SearchTreeAh(const TreeAhIndex &index, std::span<const float> query, size_t k,
                              size_t probes, size_t reorder) {
  if (k == 0) UsageError("search: k must be positive");
  if (probes == 0) UsageError("search: probes must be positive");
  if (static_cast<Eigen::Index>(query.size()) != index.store.dim()) UsageError("search: query width mismatch");
  std::vector<float> q = NormalizeQuery(query);
  if (q.empty()) return {};
  const size_t p = static_cast<size_t>(index.partition_centroids.rows());
  probes = std::min(probes, p);
  std::vector<uint32_t> order(p);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<float> pscore(p);
  for (size_t i = 0; i < p; ++i) pscore[i] = Dot(q.data(), index.partition_centroids.row(i).data(), q.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probes), order.end(),
                    [&](uint32_t a, uint32_t b) { return pscore[a] != pscore[b] ? pscore[a] > pscore[b] : a < b; });
  order.resize(probes);

  std::vector<float> lut = BuildLut(index.codebooks, q);
  if (UseFastScan(index.codebooks, reorder) && !index.packed.empty()) {
    const uint32_t padded = index.codebooks.subspaces + index.codebooks.subspaces % 2;
    std::vector<uint8_t> qlut = QuantizeLut(lut, index.codebooks.subspaces, padded);
    std::vector<ScanPart> parts;
    for (uint32_t part : order) {
      if (index.packed[part].items > 0) parts.push_back({&index.packed[part], index.members[part].data()});
    }
    return FastScanSearch(index.store, q, parts, qlut, std::max(reorder, k), k);
  }
  std::vector<uint32_t> items;
  for (uint32_t part : order) items.insert(items.end(), index.members[part].begin(), index.members[part].end());
  return ScoreFloat(index.store, index.codebooks, index.codes, q, lut, items, k, reorder);
}

IndexParams ResolveIndexParams(IndexParams params, size_t n, size_t d) {
  if (params.kind != "brute" && params.kind != "ah" && params.kind != "tree") {
    UsageError("index kind must be brute, ah or tree (got '" + params.kind + "')");
  }
  if (params.subspaces == 0) params.subspaces = static_cast<uint32_t>(std::max<size_t>(1, d / 4));
  if (params.partitions == 0) {
    params.partitions = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  }
  if (params.probes == 0) params.probes = std::max<uint32_t>(1, params.partitions / 20);
  return params;
}

const VectorStore &RetrievalIndex::store() const {
  if (auto *s = std::get_if<VectorStore>(&impl)) return *s;
  if (auto *a = std::get_if<AhIndex>(&impl)) return a->store;
  return std::get<TreeAhIndex>(impl).store;
}

std::string RetrievalIndex::kind() const {
  switch (impl.index()) {
    case 0: return "brute";
    case 1: return "ah";
    default: return "tree";
  }
}

std::vector<Hit> RetrievalIndex::Search(std::span<const float> query, size_t k) const {
  if (auto *s = std::get_if<VectorStore>(&impl)) return SearchBrute(*s, query, k);
  if (auto *a = std::get_if<AhIndex>(&impl)) return SearchAh(*a, query, k, params.reorder);
  return SearchTreeAh(std::get<TreeAhIndex>(impl), query, k, params.probes, params.reorder);
}

RetrievalIndex BuildIndex(const Matrix<float> &encodings, std::vector<std::string> ids,
                          const IndexParams &params, uint64_t seed) {
  RetrievalIndex index;
  index.params = ResolveIndexParams(params, ids.size(), static_cast<size_t>(encodings.cols()));
  VectorStore store = BuildBrute(encodings, std::move(ids));
  const IndexParams &p = index.params;
  if (p.kind == "brute") {
    index.impl = std::move(store);
  } else if (p.kind == "ah") {
    index.impl = BuildAh(std::move(store), p.subspaces, p.centers, seed);
  } else {
    index.impl = BuildTreeAh(std::move(store), p.partitions, p.subspaces, p.centers, seed);
  }
  return index;
}

std::vector<uint8_t> SerializeIndex(const RetrievalIndex &index) {
  const VectorStore &store = index.store();
  const Codebooks *cb = nullptr;
  const std::vector<uint16_t> *codes = nullptr;
  const TreeAhIndex *tree = std::get_if<TreeAhIndex>(&index.impl);
  if (auto *a = std::get_if<AhIndex>(&index.impl)) {
    cb = &a->codebooks;
    codes = &a->codes;
  } else if (tree != nullptr) {
    cb = &tree->codebooks;
    codes = &tree->codes;
  }
  ByteWriter w;
  w.PutBytes(kIndexMagic);
  w.PutU32(static_cast<uint32_t>(index.impl.index()));
  w.PutU64(store.size());
  w.PutU32(static_cast<uint32_t>(store.dim()));
  w.PutU32(cb ? cb->subspaces : 0);
  w.PutU32(cb ? cb->centers : 0);
  w.PutU32(tree ? static_cast<uint32_t>(tree->partition_centroids.rows()) : 0);
  w.PutU32(index.params.probes);
  w.PutU32(index.params.reorder);
  for (const std::string &id : store.ids) w.PutString(id);
  w.PutF32s(std::span<const float>(store.vectors.data(), static_cast<size_t>(store.vectors.size())));
  if (cb != nullptr) {
    for (const auto &c : cb->centroids) w.PutF32s(std::span<const float>(c.data(), static_cast<size_t>(c.size())));
    if (cb->centers <= 256) {
      std::vector<uint8_t> narrow(codes->begin(), codes->end());
      w.PutU8s(narrow);
    } else {
      w.PutU16s(*codes);
    }
  }
  if (tree != nullptr) {
    const Matrix<float> &pc = tree->partition_centroids;
    w.PutF32s(std::span<const float>(pc.data(), static_cast<size_t>(pc.size())));
    for (uint32_t a : tree->assignments) w.PutU32(a);
  }
  w.PutChecksum();
  return w.data();
}

RetrievalIndex DeserializeIndex(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "index");
  if (bytes.size() < kIndexMagic.size() || r.GetBytes(kIndexMagic.size()) != kIndexMagic) {
    DataError("index: version mismatch (bad magic header, expected DEERIDX1)");
  }
  // Checksum first so corruption is reported as such, not as a shape error.
  if (bytes.size() >= kIndexMagic.size() + 4) {
    const size_t body = bytes.size() - 4;
    uint32_t stored = static_cast<uint32_t>(bytes[body]) | static_cast<uint32_t>(bytes[body + 1]) << 8 |
                      static_cast<uint32_t>(bytes[body + 2]) << 16 |
                      static_cast<uint32_t>(bytes[body + 3]) << 24;
    if (stored != Crc32c(bytes.subspan(0, body))) DataError("index: checksum mismatch");
  }
  uint32_t kind = r.GetU32();
  if (kind > 2) DataError("index: unknown index kind " + std::to_string(kind));
  uint64_t n = r.GetU64();
  uint32_t d = r.GetU32(), s = r.GetU32(), c = r.GetU32(), p = r.GetU32();
  RetrievalIndex index;
  index.params.kind = kind == 0 ? "brute" : kind == 1 ? "ah" : "tree";
  index.params.subspaces = s;
  index.params.centers = c;
  index.params.partitions = p;
  index.params.probes = r.GetU32();
  index.params.reorder = r.GetU32();
  if (n == 0 || d == 0) DataError("index: empty index");
  if (kind > 0 && (s == 0 || c == 0 || d % s != 0)) DataError("index: invalid quantizer shape");
  if (kind == 2 && p == 0) DataError("index: invalid partition count");
  r.Require(n * 4);
  VectorStore store;
  store.ids.reserve(n);
  for (uint64_t i = 0; i < n; ++i) store.ids.push_back(r.GetString());
  r.Require(n * d * 4);
  store.vectors.resize(static_cast<Eigen::Index>(n), d);
  r.GetF32s(std::span<float>(store.vectors.data(), static_cast<size_t>(store.vectors.size())));
  store.id_rank = RankIds(store.ids);

  Codebooks cb;
  std::vector<uint16_t> codes;
  if (kind > 0) {
    cb.subspaces = s;
    cb.centers = c;
    cb.sub_dim = d / s;
    r.Require(static_cast<size_t>(s) * c * cb.sub_dim * 4);
    for (uint32_t i = 0; i < s; ++i) {
      Matrix<float> m(c, cb.sub_dim);
      r.GetF32s(std::span<float>(m.data(), static_cast<size_t>(m.size())));
      cb.centroids.push_back(std::move(m));
    }
    codes.resize(n * s);
    if (c <= 256) {
      std::vector<uint8_t> narrow(n * s);
      r.GetU8s(narrow);
      std::copy(narrow.begin(), narrow.end(), codes.begin());
    } else {
      r.GetU16s(codes);
    }
    for (uint16_t code : codes) {
      if (code >= c) DataError("index: code out of range");
    }
  }
  if (kind == 0) {
    index.impl = std::move(store);
  } else if (kind == 1) {
    AhIndex ah;
    ah.codebooks = std::move(cb);
    ah.codes = std::move(codes);
    if (c == kFastScanCenters) ah.packed = PackCodes(ah.codes, s);
    ah.store = std::move(store);
    index.impl = std::move(ah);
  } else {
    TreeAhIndex tree;
    tree.codebooks = std::move(cb);
    tree.codes = std::move(codes);
    tree.partition_centroids.resize(p, d);
    r.Require(static_cast<size_t>(p) * d * 4 + n * 4);
    r.GetF32s(std::span<float>(tree.partition_centroids.data(),
                               static_cast<size_t>(tree.partition_centroids.size())));
    tree.assignments.resize(n);
    for (auto &a : tree.assignments) a = r.GetU32();
    tree.store = std::move(store);
    FinishTree(tree);
    index.impl = std::move(tree);
  }
  r.VerifyChecksum();
  return index;
}

void SaveIndex(const RetrievalIndex &index, const std::string &path) {
  WriteFileBytes(path, SerializeIndex(index));
}

RetrievalIndex LoadIndex(const std::string &path) { return DeserializeIndex(ReadFileBytes(path)); }

}  // namespace entret
