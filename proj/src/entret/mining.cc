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

#include "entret/mining.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace entret {

namespace {

constexpr Eigen::Index kScoreChunk = 512;

void NormalizeRows(Matrix<float> &m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double n = m.row(i).template cast<double>().norm();
    if (n < kDegenerateNorm) {
      m.row(i).setZero();
    } else {
      m.row(i) = (m.row(i).template cast<double>() / n).template cast<float>();
    }
  }
}

// Top k entity indices of one score row.
std::vector<uint32_t> SelectTop(const float *scores, const std::vector<uint32_t> &rank, size_t k,
                                std::vector<uint32_t> &scratch) {
  const size_t n = rank.size();
  k = std::min(k, n);
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), 0u);
  auto better = [&](uint32_t a, uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return rank[a] < rank[b];
  };
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end(),
                    better);
  return std::vector<uint32_t>(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
}

// Calls fn(mention, top) for every mention in order.
template <typename Fn>
void ForEachTop(const EncodingSnapshot &s, size_t k, Fn &&fn) {
  std::vector<uint32_t> scratch;
  const Eigen::Index n = s.mentions.rows();
  Matrix<float> scores;
  for (Eigen::Index begin = 0; begin < n; begin += kScoreChunk) {
    Eigen::Index end = std::min(n, begin + kScoreChunk);
    scores.noalias() = s.mentions.middleRows(begin, end - begin) * s.entities.transpose();
    for (Eigen::Index i = begin; i < end; ++i) {
      fn(static_cast<size_t>(i), SelectTop(scores.row(i - begin).data(), s.entity_rank, k, scratch));
    }
  }
}

std::vector<HardPair> HeldoutPairs(const EncodingSnapshot &snapshot, uint32_t neighbors) {
  std::vector<HardPair> pairs;
  for (size_t i = 0; i < snapshot.mention_gold.size(); ++i) {
    pairs.push_back({static_cast<uint32_t>(i), snapshot.mention_gold[i], 1});
  }
  std::vector<HardPair> negatives = MineHardNegatives(snapshot, neighbors);
  pairs.insert(pairs.end(), negatives.begin(), negatives.end());
  return pairs;
}

double PairAuc(const Params<float> &params, const TrainingSet &mentions,
               const std::vector<EncodedEntity> &entities, const std::vector<HardPair> &pairs) {
  std::vector<int> labels;
  bool pos = false, neg = false;
  for (const HardPair &p : pairs) {
    labels.push_back(p.label);
    (p.label ? pos : neg) = true;
  }
  if (!pos || !neg) return std::numeric_limits<double>::quiet_NaN();
  return Auc(ScorePairs(params, mentions, entities, pairs), labels);
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::vector<uint32_t> IdRanks(const std::vector<std::string> &ids) {
  std::vector<uint32_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return ids[a] < ids[b]; });
  std::vector<uint32_t> rank(ids.size());
  for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<uint32_t>(r);
  return rank;
}

EncodingSnapshot SnapshotEncodings(const Params<float> &params, const TrainingSet &mentions,
                                   const std::vector<EncodedEntity> &entities,
                                   const std::vector<std::string> &entity_ids) {
  if (entity_ids.size() != entities.size()) UsageError("snapshot: entity ids and encodings differ");
  for (uint32_t g : mentions.gold) {
    if (g >= entities.size()) UsageError("snapshot: gold index out of range");
  }
  EncodingSnapshot s;
  s.mentions = EncodeMentions(params, mentions.mentions);
  s.entities = EncodeEntities(params, entities);
  NormalizeRows(s.mentions);
  NormalizeRows(s.entities);
  s.mention_gold = mentions.gold;
  s.entity_rank = IdRanks(entity_ids);
  return s;
}

std::vector<uint32_t> TopEntities(const EncodingSnapshot &snapshot, size_t mention, size_t k) {
  if (mention >= static_cast<size_t>(snapshot.mentions.rows())) UsageError("mention out of range");
  Vector<float> scores = snapshot.entities * snapshot.mentions.row(mention).transpose();
  std::vector<uint32_t> scratch;
  return SelectTop(scores.data(), snapshot.entity_rank, k, scratch);
}

std::vector<HardPair> MineHardNegatives(const EncodingSnapshot &snapshot, size_t k) {
  if (k == 0) UsageError("mining needs k >= 1");
  std::vector<HardPair> out;
  ForEachTop(snapshot, k, [&](size_t m, const std::vector<uint32_t> &top) {
    const uint32_t gold = snapshot.mention_gold[m];
    for (uint32_t e : top) {
      if (e == gold) break;
      out.push_back({static_cast<uint32_t>(m), e, 0});
    }
  });
  return out;
}

double FullCatalogRecallAt1(const EncodingSnapshot &snapshot) {
  if (snapshot.mention_gold.empty()) return 0;
  size_t hits = 0;
  ForEachTop(snapshot, 1, [&](size_t m, const std::vector<uint32_t> &top) {
    hits += !top.empty() && top[0] == snapshot.mention_gold[m];
  });
  return static_cast<double>(hits) / static_cast<double>(snapshot.mention_gold.size());
}

size_t HardPairPool::Append(const std::vector<HardPair> &pairs) {
  size_t added = 0;
  for (const HardPair &p : pairs) {
    if (seen_.insert({p.mention, p.entity}).second) {
      pairs_.push_back(p);
      ++added;
    }
  }
  round_counts_.push_back(added);
  return added;
}

MiningRoundResult MiningRound(Trainer &trainer, Params<float> &params, const MiningData &data,
                              HardPairPool &pool, uint32_t neighbors, uint32_t round) {
  if (neighbors == 0) UsageError("mining needs neighbors >= 1");
  MiningRoundResult result;
  result.round = round;
  EncodingSnapshot train_snapshot =
      SnapshotEncodings(params, *data.train, *data.entities, *data.entity_ids);
  result.new_negatives = pool.Append(MineHardNegatives(train_snapshot, neighbors));
  result.pool_size = pool.size();

  EncodingSnapshot heldout_snapshot =
      SnapshotEncodings(params, *data.heldout, *data.entities, *data.entity_ids);
  result.r1_before = FullCatalogRecallAt1(heldout_snapshot);
  PairSet heldout_pairs{data.heldout, HeldoutPairs(heldout_snapshot, neighbors)};
  result.auc_before = PairAuc(params, *data.heldout, *data.entities, heldout_pairs.pairs);

  HardPairTask task{data.train, &pool.pairs()};
  result.train = trainer.Run(*data.train, *data.heldout, &task, &heldout_pairs);

  result.r1_after = FullCatalogRecallAt1(
      SnapshotEncodings(params, *data.heldout, *data.entities, *data.entity_ids));
  result.auc_after = PairAuc(params, *data.heldout, *data.entities, heldout_pairs.pairs);
  return result;
}

MiningReport RunIterativeMining(Params<float> &params, const MiningData &data,
                                const MiningConfig &config, uint64_t seed) {
  if (config.rounds == 0) UsageError("mining rounds must be at least 1");
  MiningReport report;
  HardPairPool pool;
  Trainer trainer(params, *data.entities, config.train, seed);
  for (uint32_t r = 1; r <= config.rounds; ++r) {
    MiningRoundResult result = MiningRound(trainer, params, data, pool, config.neighbors, r);
    if (r == 1) report.curve.push_back({0, 0, 0, result.r1_before, result.auc_before});
    report.curve.push_back({r, result.new_negatives, result.pool_size, result.r1_after, result.auc_after});
    report.rounds.push_back(std::move(result));
  }
  return report;
}

std::string MiningReport::Csv() const {
  std::string out = "round,new_negatives,pool_size,heldout_r1,auc\n";
  for (const MiningCurvePoint &p : curve) {
    out += std::to_string(p.round) + "," + std::to_string(p.new_negatives) + "," +
           std::to_string(p.pool_size) + "," + FormatDouble(p.heldout_r1) + "," + FormatDouble(p.auc) +
           "\n";
  }
  return out;
}

std::string MiningReport::Json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const MiningCurvePoint &p : curve) {
    nlohmann::ordered_json j;
    j["round"] = p.round;
    j["new_negatives"] = p.new_negatives;
    j["pool_size"] = p.pool_size;
    j["heldout_r1"] = p.heldout_r1;
    j["auc"] = std::isfinite(p.auc) ? nlohmann::ordered_json(p.auc) : nlohmann::ordered_json();
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace entret
