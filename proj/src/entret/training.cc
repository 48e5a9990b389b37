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

#include "entret/training.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <optional>
#include <unordered_set>

#include "json.hpp"

namespace entret {

namespace {

// Row-normalized copy in double precision, remembering the norms.
struct UnitRows {
  Matrix<double> unit;
  std::vector<double> norm;
};

template <typename T>
UnitRows Normalize(const Matrix<T> &m) {
  UnitRows out;
  out.unit = m.template cast<double>();
  out.norm.resize(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double n = out.unit.row(i).norm();
    out.norm[i] = n;
    if (n < kDegenerateNorm) {
      out.unit.row(i).setZero();
    } else {
      out.unit.row(i) /= n;
    }
  }
  return out;
}

// d x from d (x / |x|).
template <typename T>
Matrix<T> NormalizeBackward(const UnitRows &u, const Matrix<double> &d_unit) {
  Matrix<double> d = Matrix<double>::Zero(d_unit.rows(), d_unit.cols());
  for (Eigen::Index i = 0; i < d_unit.rows(); ++i) {
    if (u.norm[i] < kDegenerateNorm) continue;
    double proj = u.unit.row(i).dot(d_unit.row(i));
    d.row(i) = (d_unit.row(i) - proj * u.unit.row(i)) / u.norm[i];
  }
  return d.template cast<T>();
}

template <typename T>
void RequireFinite(const Matrix<T> &m, const char *layer) {
  if (!m.allFinite()) NumericError(std::string("non-finite values in ") + layer);
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

SoftmaxLoss SoftmaxLossAndGrad(const Matrix<double> &sims, double scale) {
  const Eigen::Index b = sims.rows();
  if (b < 2 || sims.cols() != b) UsageError("softmax loss needs a square matrix with B >= 2");
  if (!sims.allFinite() || !std::isfinite(scale)) NumericError("non-finite input to softmax loss");
  SoftmaxLoss out;
  Matrix<double> logits = scale * sims;
  out.d_logits.resize(b, b);
  double total = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    double max = logits.row(i).maxCoeff();
    double sum = 0;
    for (Eigen::Index j = 0; j < b; ++j) sum += std::exp(logits(i, j) - max);
    double lse = max + std::log(sum);
    total += lse - logits(i, i);
    for (Eigen::Index j = 0; j < b; ++j) {
      double p = std::exp(logits(i, j) - lse);
      out.d_logits(i, j) = (p - (i == j ? 1.0 : 0.0)) / static_cast<double>(b);
    }
  }
  out.loss = total / static_cast<double>(b);
  out.d_sims = scale * out.d_logits;
  out.d_scale = (sims.array() * out.d_logits.array()).sum();
  return out;
}

LogisticLoss LogisticLossAndGrad(double score, int label, double hard_scale, double hard_offset) {
  const double z = hard_scale * score + hard_offset;
  const double y = label ? 1.0 : 0.0;
  LogisticLoss out;
  // -y log g(z) - (1-y) log(1-g(z)) = softplus(z) - y z.
  out.loss = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
  const double f = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  const double dz = f - y;
  out.d_score = dz * hard_scale;
  out.d_scale = dz * score;
  out.d_offset = dz;
  return out;
}

double InBatchRecallAt1(const Matrix<double> &sims) {
  const Eigen::Index b = sims.rows();
  if (b < 2) UsageError("in-batch recall needs B >= 2");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    bool best = true;
    for (Eigen::Index j = 0; j < sims.cols() && best; ++j) {
      if (j != i && sims(i, j) >= sims(i, i)) best = false;
    }
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(b);
}

double Auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) UsageError("auc: scores and labels differ in length");
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of positive ranks with ties sharing their average rank.
  double positive_rank_sum = 0;
  size_t positives = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) DataError("auc needs both positive and negative labels");
  double p = static_cast<double>(positives), n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1) / 2) / (p * n);
}

template <typename T>
BatchLoss BackwardBatch(const Params<T> &params, const BatchInput &batch, Gradients<T> *grads) {
  if (batch.mentions.size() != batch.entities.size()) UsageError("batch mention/entity counts differ");
  if (batch.mentions.size() < 2) UsageError("softmax batch needs at least 2 pairs");
  if (batch.hard_mentions.size() != batch.hard_entities.size() ||
      batch.hard_mentions.size() != batch.hard_labels.size()) {
    UsageError("hard batch lists differ in length");
  }
  BatchLoss loss;

  MentionTower<T> mentions;
  EntityTower<T> entities;
  mentions.Forward(params, batch.mentions);
  entities.Forward(params, batch.entities);
  RequireFinite(mentions.encodings(), "mention tower");
  RequireFinite(entities.encodings(), "entity tower");
  UnitRows mu = Normalize(mentions.encodings());
  UnitRows eu = Normalize(entities.encodings());
  Matrix<double> sims = (mu.unit * eu.unit.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  SoftmaxLoss soft = SoftmaxLossAndGrad(sims, static_cast<double>(params.softmax_scale));
  loss.softmax = soft.loss;

  const bool has_hard = !batch.hard_mentions.empty();
  MentionTower<T> hard_mentions;
  EntityTower<T> hard_entities;
  UnitRows hmu, heu;
  Vector<double> d_scores;
  double d_hard_scale = 0, d_hard_offset = 0;
  if (has_hard) {
    hard_mentions.Forward(params, batch.hard_mentions);
    hard_entities.Forward(params, batch.hard_entities);
    RequireFinite(hard_mentions.encodings(), "mention tower (hard pairs)");
    RequireFinite(hard_entities.encodings(), "entity tower (hard pairs)");
    hmu = Normalize(hard_mentions.encodings());
    heu = Normalize(hard_entities.encodings());
    const Eigen::Index n = hmu.unit.rows();
    d_scores.resize(n);
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = std::clamp(hmu.unit.row(i).dot(heu.unit.row(i)), -1.0, 1.0);
      LogisticLoss l = LogisticLossAndGrad(s, batch.hard_labels[i], params.hard_scale, params.hard_offset);
      total += l.loss;
      d_scores[i] = l.d_score / static_cast<double>(n);
      d_hard_scale += l.d_scale / static_cast<double>(n);
      d_hard_offset += l.d_offset / static_cast<double>(n);
    }
    loss.hard = total / static_cast<double>(n);
  }
  loss.total = loss.softmax + loss.hard;
  if (!std::isfinite(loss.total)) NumericError("non-finite loss");
  if (grads == nullptr) return loss;

  grads->softmax_scale += static_cast<T>(soft.d_scale);
  Matrix<double> d_mu = soft.d_sims * eu.unit;
  Matrix<double> d_eu = soft.d_sims.transpose() * mu.unit;
  mentions.Backward(params, NormalizeBackward<T>(mu, d_mu), *grads);
  entities.Backward(params, NormalizeBackward<T>(eu, d_eu), *grads);

  if (has_hard) {
    grads->hard_scale += static_cast<T>(d_hard_scale);
    grads->hard_offset += static_cast<T>(d_hard_offset);
    Matrix<double> d_hmu = heu.unit.array().colwise() * d_scores.array();
    Matrix<double> d_heu = hmu.unit.array().colwise() * d_scores.array();
    hard_mentions.Backward(params, NormalizeBackward<T>(hmu, d_hmu), *grads);
    hard_entities.Backward(params, NormalizeBackward<T>(heu, d_heu), *grads);
  }
  return loss;
}

template BatchLoss BackwardBatch<float>(const Params<float> &, const BatchInput &, Gradients<float> *);
template BatchLoss BackwardBatch<double>(const Params<double> &, const BatchInput &, Gradients<double> *);

double MaxRelativeError(const std::function<double()> &loss, std::span<double *const> coordinates,
                        std::span<const double> analytic, double epsilon) {
  if (!(epsilon > 0)) UsageError("finite difference epsilon must be positive");
  if (coordinates.size() != analytic.size()) UsageError("coordinate/gradient count mismatch");
  double worst = 0;
  for (size_t i = 0; i < coordinates.size(); ++i) {
    double *x = coordinates[i];
    const double saved = *x;
    *x = saved + epsilon;
    double plus = loss();
    *x = saved - epsilon;
    double minus = loss();
    *x = saved;
    double numeric = (plus - minus) / (2 * epsilon);
    double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

GradCheckResult FiniteDifferenceCheck(Params<double> &params, const BatchInput &batch,
                                      double epsilon, size_t samples, uint64_t seed) {
  if (!(epsilon > 0)) UsageError("finite difference epsilon must be positive");
  Gradients<double> grads = Gradients<double>::ZerosLike(params);
  BackwardBatch(params, batch, &grads);

  struct Block {
    std::string name;
    double *data;
    Eigen::Index size;
  };
  std::vector<Block> blocks;
  params.ForEachBlock([&](const std::string &name, double *data, Eigen::Index size) {
    blocks.push_back({name, data, size});
  });
  // Dense gradient blocks in the same order, after the three tables.
  std::vector<const double *> dense;
  auto add = [&](const AffineGrad<double> &a) {
    dense.push_back(a.weight.data());
    dense.push_back(a.bias.data());
  };
  for (const auto &t : grads.text) add(t);
  add(grads.category_layer);
  add(grads.mention_context);
  add(grads.mention);
  add(grads.entity_doc);
  add(grads.entity);
  dense.push_back(&grads.softmax_scale);
  dense.push_back(&grads.hard_scale);
  dense.push_back(&grads.hard_offset);
  const SparseRows<double> *tables[3] = {&grads.unigram, &grads.bigram, &grads.category};
  const Eigen::Index width = params.dims.embed_dim;

  Rng rng(seed);
  std::vector<double *> coords;
  std::vector<double> analytic;
  std::vector<size_t> owner;
  for (size_t s = 0; s < samples; ++s) {
    size_t b = s % blocks.size();
    const Block &block = blocks[b];
    Eigen::Index offset;
    double value;
    if (b < 3) {
      const auto &rows = tables[b]->rows();
      uint32_t row;
      if (!rows.empty() && rng.Uniform() < 0.9) {
        row = rows[rng.Below(rows.size())];
      } else {
        row = static_cast<uint32_t>(rng.Below(static_cast<uint64_t>(block.size / width)));
      }
      Eigen::Index col = static_cast<Eigen::Index>(rng.Below(width));
      offset = static_cast<Eigen::Index>(row) * width + col;
      value = tables[b]->At(row, col);
    } else {
      offset = static_cast<Eigen::Index>(rng.Below(static_cast<uint64_t>(block.size)));
      value = dense[b - 3][offset];
    }
    coords.push_back(block.data + offset);
    analytic.push_back(value);
    owner.push_back(b);
  }

  auto loss = [&]() { return BackwardBatch<double>(params, batch, nullptr).total; };
  GradCheckResult result;
  result.coordinates = coords.size();
  for (size_t b = 0; b < blocks.size() && b < samples; ++b) result.families.push_back(blocks[b].name);
  for (size_t i = 0; i < coords.size(); ++i) {
    double err = MaxRelativeError(loss, std::span<double *const>(&coords[i], 1),
                                  std::span<const double>(&analytic[i], 1), epsilon);
    if (err > result.max_relative_error || result.worst_family.empty()) {
      if (err >= result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_family = blocks[owner[i]].name;
      }
    }
  }
  return result;
}

GradCheckResult RunGradientCheck(uint32_t dims, uint32_t batch, size_t samples, uint64_t seed,
                                 double epsilon) {
  if (dims == 0) UsageError("gradcheck: dims must be positive");
  if (batch < 2) UsageError("gradcheck: batch must be at least 2");
  ModelDims md;
  md.embed_dim = dims;
  md.encode_dim = dims;
  md.vocab_rows = 48;
  md.category_rows = 12;
  Params<double> params = Params<double>::Random(md, seed);
  Rng rng(seed ^ 0x5eed);
  // Move the scalars off their neutral initial values.
  params.softmax_scale = rng.Uniform(2.0, 4.0);
  params.hard_scale = rng.Uniform(1.0, 3.0);
  params.hard_offset = rng.Uniform(-0.5, 0.5);

  auto text = [&](size_t max_len) {
    EncodedText t;
    size_t len = 1 + rng.Below(max_len);
    for (size_t i = 0; i < len; ++i) t.unigrams.push_back(static_cast<uint32_t>(rng.Below(md.vocab_rows)));
    for (size_t i = 1; i < len; ++i) t.bigrams.push_back(static_cast<uint32_t>(rng.Below(md.vocab_rows)));
    return t;
  };
  const size_t n = 2 * batch;
  std::vector<EncodedMention> mentions(n);
  std::vector<EncodedEntity> entities(n);
  for (size_t i = 0; i < n; ++i) {
    for (auto &t : mentions[i].text) t = text(5);
    entities[i].title = text(3);
    entities[i].paragraph = text(8);
    size_t cats = 1 + rng.Below(3);
    for (size_t c = 0; c < cats; ++c) {
      entities[i].categories.push_back(static_cast<uint32_t>(rng.Below(md.category_rows)));
    }
  }
  BatchInput input;
  for (size_t i = 0; i < batch; ++i) {
    input.mentions.push_back(&mentions[i]);
    input.entities.push_back(&entities[i]);
    input.hard_mentions.push_back(&mentions[batch + i]);
    input.hard_entities.push_back(&entities[batch + i]);
    input.hard_labels.push_back(static_cast<int>(i % 2));
  }
  return FiniteDifferenceCheck(params, input, epsilon, samples, seed);
}

template <typename T>
void SgdMomentumStep(Params<T> &params, const Gradients<T> &grads, Params<T> &velocity, double lr,
                     double mu) {
  if (!(params.dims == velocity.dims)) UsageError("sgd: velocity shape does not match params");
  // Dense gradient view in block order.
  std::vector<std::pair<T *, Eigen::Index>> p_blocks, v_blocks;
  params.ForEachBlock([&](const std::string &, T *d, Eigen::Index n) { p_blocks.emplace_back(d, n); });
  velocity.ForEachBlock([&](const std::string &, T *d, Eigen::Index n) { v_blocks.emplace_back(d, n); });
  const Eigen::Index width = params.dims.embed_dim;
  const SparseRows<T> *tables[3] = {&grads.unigram, &grads.bigram, &grads.category};
  std::vector<const T *> dense;
  auto add = [&](const AffineGrad<T> &a) {
    dense.push_back(a.weight.data());
    dense.push_back(a.bias.data());
  };
  for (const auto &t : grads.text) add(t);
  add(grads.category_layer);
  add(grads.mention_context);
  add(grads.mention);
  add(grads.entity_doc);
  add(grads.entity);
  dense.push_back(&grads.softmax_scale);
  dense.push_back(&grads.hard_scale);
  dense.push_back(&grads.hard_offset);
  for (size_t b = 0; b < p_blocks.size(); ++b) {
    T *p = p_blocks[b].first;
    T *v = v_blocks[b].first;
    const Eigen::Index n = p_blocks[b].second;
    for (Eigen::Index i = 0; i < n; ++i) {
      T g = b < 3 ? tables[b]->At(static_cast<uint32_t>(i / width), i % width) : dense[b - 3][i];
      v[i] = static_cast<T>(mu * v[i] + g);
      p[i] = static_cast<T>(p[i] - lr * v[i]);
    }
  }
}

template void SgdMomentumStep<float>(Params<float> &, const Gradients<float> &, Params<float> &,
                                     double, double);
template void SgdMomentumStep<double>(Params<double> &, const Gradients<double> &, Params<double> &,
                                      double, double);

MomentumOptimizer::MomentumOptimizer(const Params<float> &params, double lr, double mu)
    : lr_(lr), mu_(mu), velocity_(Params<float>::Zeros(params.dims)) {
  if (!(lr > 0)) UsageError("learning rate must be positive");
  if (!(mu >= 0 && mu < 1)) UsageError("momentum must be in [0, 1)");
  velocity_.softmax_scale = velocity_.hard_scale = velocity_.hard_offset = 0.0f;
  last_unigram_.assign(params.unigram.rows(), 0);
  last_bigram_.assign(params.bigram.rows(), 0);
  last_category_.assign(params.category.rows(), 0);
}

void MomentumOptimizer::Reset() {
  velocity_.ForEachBlock([](const std::string &, float *data, Eigen::Index n) { std::fill(data, data + n, 0.0f); });
  velocity_.softmax_scale = velocity_.hard_scale = velocity_.hard_offset = 0.0f;
  std::fill(last_unigram_.begin(), last_unigram_.end(), step_);
  std::fill(last_bigram_.begin(), last_bigram_.end(), step_);
  std::fill(last_category_.begin(), last_category_.end(), step_);
}

void MomentumOptimizer::CatchUp(float *p, float *v, Eigen::Index width, uint64_t missed) const {
  if (missed == 0 || mu_ == 0) {
    if (mu_ == 0) std::fill(v, v + width, 0.0f);
    return;
  }
  const double decay = std::pow(mu_, static_cast<double>(missed));
  const double travel = lr_ * mu_ * (1 - decay) / (1 - mu_);
  for (Eigen::Index c = 0; c < width; ++c) {
    p[c] = static_cast<float>(p[c] - travel * v[c]);
    v[c] = static_cast<float>(v[c] * decay);
  }
}

void MomentumOptimizer::StepTable(Matrix<float> &table, Matrix<float> &velocity,
                                  std::vector<uint64_t> &last, const SparseRows<float> &grad) {
  const Eigen::Index width = table.cols();
  for (size_t i = 0; i < grad.rows().size(); ++i) {
    uint32_t row = grad.rows()[i];
    float *p = table.row(row).data();
    float *v = velocity.row(row).data();
    CatchUp(p, v, width, step_ - 1 - last[row]);
    const float *g = grad.RowAt(i);
    for (Eigen::Index c = 0; c < width; ++c) {
      v[c] = static_cast<float>(mu_ * v[c] + g[c]);
      p[c] = static_cast<float>(p[c] - lr_ * v[c]);
    }
    last[row] = step_;
  }
}

void MomentumOptimizer::FlushTable(Matrix<float> &table, Matrix<float> &velocity,
                                   std::vector<uint64_t> &last) {
  const Eigen::Index width = table.cols();
  for (Eigen::Index row = 0; row < table.rows(); ++row) {
    if (last[row] == step_) continue;
    CatchUp(table.row(row).data(), velocity.row(row).data(), width, step_ - last[row]);
    last[row] = step_;
  }
}

void MomentumOptimizer::Step(Params<float> &params, const Gradients<float> &grads) {
  ++step_;
  StepTable(params.unigram, velocity_.unigram, last_unigram_, grads.unigram);
  StepTable(params.bigram, velocity_.bigram, last_bigram_, grads.bigram);
  StepTable(params.category, velocity_.category, last_category_, grads.category);
  auto dense = [&](AffineLayer<float> &p, AffineLayer<float> &v, const AffineGrad<float> &g) {
    v.weight = (mu_ * v.weight.cast<double>() + g.weight.cast<double>()).cast<float>();
    p.weight = (p.weight.cast<double>() - lr_ * v.weight.cast<double>()).cast<float>();
    v.bias = (mu_ * v.bias.cast<double>() + g.bias.cast<double>()).cast<float>();
    p.bias = (p.bias.cast<double>() - lr_ * v.bias.cast<double>()).cast<float>();
  };
  for (int k = 0; k < kNumTextKinds; ++k) dense(params.text[k], velocity_.text[k], grads.text[k]);
  dense(params.category_layer, velocity_.category_layer, grads.category_layer);
  dense(params.mention_context, velocity_.mention_context, grads.mention_context);
  dense(params.mention, velocity_.mention, grads.mention);
  dense(params.entity_doc, velocity_.entity_doc, grads.entity_doc);
  dense(params.entity, velocity_.entity, grads.entity);
  auto scalar = [&](float &p, float &v, float g) {
    v = static_cast<float>(mu_ * v + g);
    p = static_cast<float>(p - lr_ * v);
  };
  scalar(params.softmax_scale, velocity_.softmax_scale, grads.softmax_scale);
  scalar(params.hard_scale, velocity_.hard_scale, grads.hard_scale);
  scalar(params.hard_offset, velocity_.hard_offset, grads.hard_offset);
}

void MomentumOptimizer::Flush(Params<float> &params) {
  FlushTable(params.unigram, velocity_.unigram, last_unigram_);
  FlushTable(params.bigram, velocity_.bigram, last_bigram_);
  FlushTable(params.category, velocity_.category, last_category_);
}

void ValidateTrainConfig(const TrainConfig &config) {
  if (config.batch_size < 2) UsageError("batch_size must be at least 2");
  if (!(config.learning_rate > 0)) UsageError("learning_rate must be positive");
  if (!(config.momentum >= 0 && config.momentum < 1)) UsageError("momentum must be in [0, 1)");
  if (config.eval_every == 0) UsageError("eval_every must be positive");
  if (config.patience == 0) UsageError("patience must be positive");
}

std::string TrainReport::LogCsv() const {
  std::string out = "step,loss,heldout_r_at_1\n";
  for (const TrainLogRow &row : log) {
    out += std::to_string(row.step) + "," + FormatDouble(row.loss) + "," + FormatDouble(row.heldout_r1) + "\n";
  }
  return out;
}

std::string TrainReport::SummaryJson() const {
  nlohmann::ordered_json j;
  j["steps"] = steps;
  j["best_step"] = best_step;
  j["final_r1"] = final_r1;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

std::vector<std::vector<uint32_t>> BuildDistinctBatches(const std::vector<uint32_t> &gold,
                                                        size_t batch_size, Rng &rng) {
  std::vector<uint32_t> pending(gold.size());
  std::iota(pending.begin(), pending.end(), 0u);
  rng.Shuffle(pending);
  std::vector<std::vector<uint32_t>> batches;
  while (pending.size() >= batch_size) {
    std::vector<uint32_t> batch, rest;
    std::unordered_set<uint32_t> used;
    for (uint32_t idx : pending) {
      if (batch.size() < batch_size && used.insert(gold[idx]).second) {
        batch.push_back(idx);
      } else {
        rest.push_back(idx);
      }
    }
    if (batch.size() < batch_size) break;
    batches.push_back(std::move(batch));
    pending = std::move(rest);
  }
  return batches;
}

BatchSampler::BatchSampler(const std::vector<uint32_t> &gold, size_t batch_size, uint64_t seed)
    : gold_(gold), batch_size_(batch_size), rng_(seed) {
  std::unordered_set<uint32_t> distinct(gold.begin(), gold.end());
  if (gold.size() < batch_size || distinct.size() < batch_size) {
    DataError("training corpus smaller than one batch: " + std::to_string(gold.size()) +
              " examples over " + std::to_string(distinct.size()) + " entities, batch size " +
              std::to_string(batch_size));
  }
}

void BatchSampler::Refill() {
  std::vector<uint32_t> epoch(gold_.size());
  std::iota(epoch.begin(), epoch.end(), 0u);
  rng_.Shuffle(epoch);
  pending_.insert(pending_.end(), epoch.begin(), epoch.end());
}

std::vector<uint32_t> BatchSampler::Next() {
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (pending_.size() < batch_size_ || attempt == 1) Refill();
    std::vector<uint32_t> batch, rest;
    std::unordered_set<uint32_t> used;
    for (uint32_t idx : pending_) {
      if (batch.size() < batch_size_ && used.insert(gold_[idx]).second) {
        batch.push_back(idx);
      } else {
        rest.push_back(idx);
      }
    }
    if (batch.size() == batch_size_) {
      pending_ = std::move(rest);
      return batch;
    }
  }
  DataError("could not assemble a batch of distinct entities");
}

double HeldoutInBatchRecall(const Params<float> &params, const TrainingSet &heldout,
                            const std::vector<std::vector<uint32_t>> &batches,
                            const std::vector<EncodedEntity> &entities) {
  if (batches.empty()) return std::numeric_limits<double>::quiet_NaN();
  MentionTower<float> mt;
  EntityTower<float> et;
  double total = 0;
  std::vector<const EncodedMention *> m;
  std::vector<const EncodedEntity *> e;
  for (const auto &batch : batches) {
    m.clear();
    e.clear();
    for (uint32_t idx : batch) {
      m.push_back(&heldout.mentions[idx]);
      e.push_back(&entities[heldout.gold[idx]]);
    }
    mt.Forward(params, m);
    et.Forward(params, e);
    Matrix<double> sims =
        SimilarityMatrix<double>(mt.encodings().cast<double>(), et.encodings().cast<double>());
    total += InBatchRecallAt1(sims);
  }
  return total / static_cast<double>(batches.size());
}

std::vector<double> ScorePairs(const Params<float> &params, const TrainingSet &mentions,
                               const std::vector<EncodedEntity> &entities,
                               const std::vector<HardPair> &pairs) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  Matrix<float> m = EncodeMentions(params, mentions.mentions);
  std::vector<bool> needed(entities.size(), false);
  for (const HardPair &p : pairs) needed[p.entity] = true;
  std::vector<EncodedEntity> subset;
  std::vector<uint32_t> row_of(entities.size(), 0);
  for (size_t i = 0; i < entities.size(); ++i) {
    if (!needed[i]) continue;
    row_of[i] = static_cast<uint32_t>(subset.size());
    subset.push_back(entities[i]);
  }
  Matrix<float> e = EncodeEntities(params, subset);
  for (const HardPair &p : pairs) {
    scores.push_back(Cosine(std::span<const float>(m.row(p.mention).data(), m.cols()),
                            std::span<const float>(e.row(row_of[p.entity]).data(), e.cols())));
  }
  return scores;
}

Trainer::Trainer(Params<float> &params, const std::vector<EncodedEntity> &entities,
                 TrainConfig config, uint64_t seed)
    : params_(params),
      entities_(entities),
      config_(config),
      rng_(seed),
      optimizer_((ValidateTrainConfig(config), params), config.learning_rate, config.momentum) {}

TrainReport Trainer::Run(const TrainingSet &train, const TrainingSet &heldout,
                         const HardPairTask *hard, const PairSet *auc_pairs) {
  const auto start = std::chrono::steady_clock::now();
  const size_t b = config_.batch_size;
  if (train.mentions.size() < b) {
    DataError("training corpus smaller than one batch (" + std::to_string(train.mentions.size()) +
              " < " + std::to_string(b) + ")");
  }
  BatchSampler sampler(train.gold, b, rng_.Next());
  Rng hard_rng = rng_.Fork(1);

  // Fixed held-out batches, sized down if the held-out set is small.
  std::unordered_set<uint32_t> heldout_entities(heldout.gold.begin(), heldout.gold.end());
  size_t heldout_batch = std::min(b, heldout_entities.size());
  std::vector<std::vector<uint32_t>> heldout_batches;
  if (heldout_batch >= 2) {
    Rng heldout_rng(0x4e1d0u);
    heldout_batches = BuildDistinctBatches(heldout.gold, heldout_batch, heldout_rng);
  }

  std::vector<int> auc_labels;
  if (auc_pairs != nullptr) {
    for (const HardPair &p : auc_pairs->pairs) auc_labels.push_back(p.label);
  }
  auto evaluate = [&](TrainLogRow &row) {
    row.heldout_r1 = HeldoutInBatchRecall(params_, heldout, heldout_batches, entities_);
    double metric = row.heldout_r1;
    if (auc_pairs != nullptr && !auc_pairs->pairs.empty()) {
      std::vector<double> scores = ScorePairs(params_, *auc_pairs->mentions, entities_, auc_pairs->pairs);
      try {
        row.auc = Auc(scores, auc_labels);
        metric = 0.5 * (metric + row.auc);
      } catch (const Error &) {
        // Single-class pair set: track recall only.
      }
    }
    return metric;
  };

  TrainReport report;
  const size_t positives = hard != nullptr ? hard->mentions->mentions.size() : 0;
  const size_t negatives = hard != nullptr ? hard->negatives->size() : 0;
  Gradients<float> grads = Gradients<float>::ZerosLike(params_);
  BatchInput batch;
  double best = -std::numeric_limits<double>::infinity();
  double last_metric = best;
  std::optional<Params<float>> best_params;
  double best_r1 = 0;
  uint32_t stale = 0;
  double loss_sum = 0;
  uint64_t loss_count = 0;
  uint64_t step = 0;
  for (step = 1; step <= config_.max_steps; ++step) {
    batch = BatchInput();
    for (uint32_t idx : sampler.Next()) {
      batch.mentions.push_back(&train.mentions[idx]);
      batch.entities.push_back(&entities_[train.gold[idx]]);
    }
    if (negatives > 0) {
      for (size_t i = 0; i < b; ++i) {
        uint64_t pick = hard_rng.Below(positives + negatives);
        HardPair pair = pick < positives
                            ? HardPair{static_cast<uint32_t>(pick), hard->mentions->gold[pick], 1}
                            : (*hard->negatives)[pick - positives];
        batch.hard_mentions.push_back(&hard->mentions->mentions[pair.mention]);
        batch.hard_entities.push_back(&entities_[pair.entity]);
        batch.hard_labels.push_back(pair.label);
      }
    }
    grads.SetZero();
    BatchLoss loss = BackwardBatch(params_, batch, &grads);
    if (!grads.AllFinite()) NumericError("non-finite gradient at step " + std::to_string(step));
    optimizer_.Step(params_, grads);
    loss_sum += loss.total;
    ++loss_count;

    if (step % config_.eval_every == 0 || step == config_.max_steps) {
      optimizer_.Flush(params_);
      TrainLogRow row;
      row.step = step;
      row.loss = loss_sum / static_cast<double>(loss_count);
      loss_sum = 0;
      loss_count = 0;
      double metric = evaluate(row);
      report.log.push_back(row);
      last_metric = metric;
      if (metric > best + config_.min_improvement) {
        best = metric;
        best_params = params_;
        best_r1 = row.heldout_r1;
        report.best_step = step;
        stale = 0;
      } else if (++stale >= config_.patience) {
        report.early_stopped = true;
        break;
      }
    }
  }
  optimizer_.Flush(params_);
  report.steps = std::min<uint64_t>(step, config_.max_steps);
  if (report.log.empty()) {
    TrainLogRow row;
    evaluate(row);
    report.final_r1 = row.heldout_r1;
  } else if (best_params && last_metric < best) {
    params_ = std::move(*best_params);
    optimizer_.Reset();
    report.final_r1 = best_r1;
  } else {
    report.final_r1 = report.log.back().heldout_r1;
    report.best_step = report.log.back().step;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace entret
