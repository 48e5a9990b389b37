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

#ifndef ENTRET_TRAINING_H_
#define ENTRET_TRAINING_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "entret/model.h"

namespace entret {

// In-batch sampled softmax over the B x B similarity matrix, mean over rows.
struct SoftmaxLoss {
  double loss = 0;
  Matrix<double> d_logits;  // d loss / d f, f = a * sims
  Matrix<double> d_sims;
  double d_scale = 0;
};
SoftmaxLoss SoftmaxLossAndGrad(const Matrix<double> &sims, double scale);

// Logistic loss on g(a_h * s + b_h) for one labeled pair.
struct LogisticLoss {
  double loss = 0;
  double d_score = 0;
  double d_scale = 0;
  double d_offset = 0;
};
LogisticLoss LogisticLossAndGrad(double score, int label, double hard_scale, double hard_offset);

// Fraction of rows whose diagonal entry strictly beats every other entry.
double InBatchRecallAt1(const Matrix<double> &sims);

// Mann-Whitney AUC; ties count one half. Throws unless both classes occur.
double Auc(std::span<const double> scores, std::span<const int> labels);

// A mention paired with a candidate entity for the logistic task; indices
// refer to the training mentions and the catalog.
struct HardPair {
  uint32_t mention = 0;
  uint32_t entity = 0;
  int label = 0;

  bool operator==(const HardPair &) const = default;
};

// One optimization step worth of inputs. The softmax batch is aligned
// (mentions[i] is paired with entities[i]); the hard batch may be empty.
struct BatchInput {
  std::vector<const EncodedMention *> mentions;
  std::vector<const EncodedEntity *> entities;
  std::vector<const EncodedMention *> hard_mentions;
  std::vector<const EncodedEntity *> hard_entities;
  std::vector<int> hard_labels;
};

struct BatchLoss {
  double total = 0;
  double softmax = 0;
  double hard = 0;
};

// Loss of one batch: softmax loss plus (if present) the mean logistic loss
// over hard pairs, each with weight 1. If 'grads' is non-null, exact
// gradients are accumulated into it.
template <typename T>
BatchLoss BackwardBatch(const Params<T> &params, const BatchInput &batch, Gradients<T> *grads);

// Central finite differences over explicit coordinates. 'coordinates'
// points into the state that 'loss' reads. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8).
double MaxRelativeError(const std::function<double()> &loss, std::span<double *const> coordinates,
                        std::span<const double> analytic, double epsilon);

struct GradCheckResult {
  double max_relative_error = 0;
  size_t coordinates = 0;
  std::vector<std::string> families;  // parameter blocks that were sampled
  std::string worst_family;
};

// Samples 'samples' coordinates spread over every parameter block (embedding
// rows are drawn mostly from rows the batch touches) and compares analytic
// gradients to central differences.
GradCheckResult FiniteDifferenceCheck(Params<double> &params, const BatchInput &batch,
                                      double epsilon, size_t samples, uint64_t seed);

// Random model and batch for a self-contained check: E = D = dims, B = batch
// softmax pairs and B hard pairs with mixed labels.
GradCheckResult RunGradientCheck(uint32_t dims, uint32_t batch, size_t samples, uint64_t seed,
                                 double epsilon = 1e-6);

// v <- mu * v + g; p <- p - lr * v, over every parameter (dense reference).
template <typename T>
void SgdMomentumStep(Params<T> &params, const Gradients<T> &grads, Params<T> &velocity, double lr,
                     double mu);

// Momentum SGD that updates embedding rows lazily: rows without gradient
// catch up on the skipped momentum steps in closed form when next touched
// or on Flush(). Mathematically identical to SgdMomentumStep.
class MomentumOptimizer {
 public:
  MomentumOptimizer(const Params<float> &params, double lr, double mu);

  void Step(Params<float> &params, const Gradients<float> &grads);
  // Brings every embedding row up to date.
  void Flush(Params<float> &params);
  // Drops all accumulated velocity.
  void Reset();
  uint64_t steps() const { return step_; }

 private:
  void CatchUp(float *param_row, float *velocity_row, Eigen::Index width, uint64_t missed) const;
  void StepTable(Matrix<float> &table, Matrix<float> &velocity, std::vector<uint64_t> &last,
                 const SparseRows<float> &grad);
  void FlushTable(Matrix<float> &table, Matrix<float> &velocity, std::vector<uint64_t> &last);

  double lr_, mu_;
  uint64_t step_ = 0;
  Params<float> velocity_;
  std::vector<uint64_t> last_unigram_, last_bigram_, last_category_;
};

struct TrainConfig {
  uint32_t batch_size = 100;
  double learning_rate = 0.01;
  double momentum = 0.9;
  uint64_t max_steps = 20000;
  uint64_t eval_every = 200;
  uint32_t patience = 5;
  double min_improvement = 1e-3;
};

void ValidateTrainConfig(const TrainConfig &config);

// Encoded mentions with gold entity indices into the encoded catalog.
struct TrainingSet {
  std::vector<EncodedMention> mentions;
  std::vector<uint32_t> gold;
};

// The logistic classification task: one positive per training mention plus
// the mined negatives.
struct HardPairTask {
  const TrainingSet *mentions = nullptr;
  const std::vector<HardPair> *negatives = nullptr;
};

// Held-out pairs for AUC tracking.
struct PairSet {
  const TrainingSet *mentions = nullptr;
  std::vector<HardPair> pairs;
};

struct TrainLogRow {
  uint64_t step = 0;
  double loss = 0;
  double heldout_r1 = 0;
  double auc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
  uint64_t steps = 0;
  double final_r1 = 0;
  double wall_seconds = 0;
  bool early_stopped = false;
  uint64_t best_step = 0;  // evaluation whose parameters were kept
  std::vector<TrainLogRow> log;

  std::string LogCsv() const;       // step,loss,heldout_r_at_1
  std::string SummaryJson() const;  // {steps, best_step, final_r1, wall_seconds}
};

// Groups example indices into batches of 'batch_size' with pairwise distinct
// gold entities, so no in-batch negative is a copy of the positive. Stops
// when the remaining examples cannot fill a batch.
std::vector<std::vector<uint32_t>> BuildDistinctBatches(const std::vector<uint32_t> &gold,
                                                        size_t batch_size, Rng &rng);

// Endless stream of distinct-entity batches over reshuffled epochs.
class BatchSampler {
 public:
  BatchSampler(const std::vector<uint32_t> &gold, size_t batch_size, uint64_t seed);
  std::vector<uint32_t> Next();

 private:
  void Refill();

  const std::vector<uint32_t> &gold_;
  size_t batch_size_;
  Rng rng_;
  std::vector<uint32_t> pending_;
};

// Mean in-batch recall@1 over fixed held-out batches.
double HeldoutInBatchRecall(const Params<float> &params, const TrainingSet &heldout,
                            const std::vector<std::vector<uint32_t>> &batches,
                            const std::vector<EncodedEntity> &entities);

// Owns the optimizer state for one parameter set; Run may be called again to
// resume (used by the mining rounds).
class Trainer {
 public:
  Trainer(Params<float> &params, const std::vector<EncodedEntity> &entities, TrainConfig config,
          uint64_t seed);

  // Softmax training with in-batch negatives; when 'hard' has negatives each
  // step also draws batch_size pairs from the classification task.
  // Evaluates every eval_every steps and stops after 'patience' evaluations
  // without improvement > min_improvement of the tracked metric (held-out
  // in-batch R@1, averaged with AUC when 'auc_pairs' is given). On return
  // the parameters are those of the best evaluation.
  TrainReport Run(const TrainingSet &train, const TrainingSet &heldout,
                  const HardPairTask *hard = nullptr, const PairSet *auc_pairs = nullptr);

 private:
  Params<float> &params_;
  const std::vector<EncodedEntity> &entities_;
  TrainConfig config_;
  Rng rng_;
  MomentumOptimizer optimizer_;
};

// Cosine scores of the given pairs under the current model.
std::vector<double> ScorePairs(const Params<float> &params, const TrainingSet &mentions,
                               const std::vector<EncodedEntity> &entities,
                               const std::vector<HardPair> &pairs);

}  // namespace entret

#endif  // ENTRET_TRAINING_H_
