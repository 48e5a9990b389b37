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

#ifndef ENTRET_MINING_H_
#define ENTRET_MINING_H_

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "entret/model.h"
#include "entret/training.h"

namespace entret {

// Encodings of every mention of a set and every catalog entity under one
// model state.
struct EncodingSnapshot {
  Matrix<float> mentions;
  Matrix<float> entities;
  std::vector<uint32_t> mention_gold;
  // entity_rank[i] is the position of entity i when ids are sorted
  // ascending; used to break score ties.
  std::vector<uint32_t> entity_rank;
};

// Position of each id in ascending order.
std::vector<uint32_t> IdRanks(const std::vector<std::string> &ids);

EncodingSnapshot SnapshotEncodings(const Params<float> &params, const TrainingSet &mentions,
                                   const std::vector<EncodedEntity> &entities,
                                   const std::vector<std::string> &entity_ids);

// Entity indices of the top k entities for one mention by cosine, ties by
// ascending id.
std::vector<uint32_t> TopEntities(const EncodingSnapshot &snapshot, size_t mention, size_t k);

// For every mention, the entities among its top k that rank strictly above
// the gold entity (all k when gold is absent), as label-0 pairs.
std::vector<HardPair> MineHardNegatives(const EncodingSnapshot &snapshot, size_t k);

// Fraction of mentions whose top-1 entity over the full catalog is gold.
double FullCatalogRecallAt1(const EncodingSnapshot &snapshot);

// Append-only set of mined negatives.
class HardPairPool {
 public:
  // Appends pairs not already present; returns how many were new.
  size_t Append(const std::vector<HardPair> &pairs);

  const std::vector<HardPair> &pairs() const { return pairs_; }
  const std::vector<size_t> &round_counts() const { return round_counts_; }
  size_t size() const { return pairs_.size(); }

 private:
  std::vector<HardPair> pairs_;
  std::set<std::pair<uint32_t, uint32_t>> seen_;
  std::vector<size_t> round_counts_;
};

struct MiningConfig {
  uint32_t rounds = 3;
  uint32_t neighbors = 10;
  TrainConfig train;  // per round
};

struct MiningRoundResult {
  uint32_t round = 0;
  size_t new_negatives = 0;
  size_t pool_size = 0;
  double r1_before = 0, r1_after = 0;
  double auc_before = 0, auc_after = 0;
  TrainReport train;
};

// Everything a mining run reads; the catalog is shared by all sets.
struct MiningData {
  const TrainingSet *train = nullptr;
  const TrainingSet *heldout = nullptr;
  const std::vector<EncodedEntity> *entities = nullptr;
  const std::vector<std::string> *entity_ids = nullptr;
};

// Mines with the current model, appends new negatives to the pool and
// resumes multi-task training through 'trainer'.
MiningRoundResult MiningRound(Trainer &trainer, Params<float> &params, const MiningData &data,
                              HardPairPool &pool, uint32_t neighbors, uint32_t round);

struct MiningCurvePoint {
  uint32_t round = 0;
  size_t new_negatives = 0;
  size_t pool_size = 0;
  double heldout_r1 = 0;
  double auc = 0;
};

struct MiningReport {
  std::vector<MiningRoundResult> rounds;
  std::vector<MiningCurvePoint> curve;  // rounds + 1 points, round 0 first

  std::string Csv() const;   // round,new_negatives,pool_size,heldout_r1,auc
  std::string Json() const;  // array of curve points
};

MiningReport RunIterativeMining(Params<float> &params, const MiningData &data,
                                const MiningConfig &config, uint64_t seed);

}  // namespace entret

#endif  // ENTRET_MINING_H_
