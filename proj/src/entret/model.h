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

// Dual-encoder forward and backward passes.
//
// Mention tower:
//   ctx  = relu(W_mc [left | right | sentence] + b)
//   phi  = W_m [ctx | span] + b
// Entity tower:
//   doc  = relu(W_ed [paragraph | categories] + b)
//   psi  = W_e [doc | title] + b
// where every text input is relu(W_k [mean unigram emb | mean bigram emb] + b)
// and categories is relu(W_c mean category emb + b). All text features share
// the unigram and bigram tables.
//
// Everything is templated on the scalar type: training runs in float, the
// finite-difference check runs the same code in double.

#ifndef ENTRET_MODEL_H_
#define ENTRET_MODEL_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "entret/common.h"
#include "entret/features.h"

namespace entret {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { kRelu, kIdentity };

enum TextKind {
  kSpanText = 0,
  kLeftText,
  kRightText,
  kSentenceText,
  kTitleText,
  kParagraphText,
  kNumTextKinds
};

const char *TextKindName(TextKind kind);

struct ModelDims {
  uint32_t embed_dim = 64;       // E
  uint32_t encode_dim = 64;      // D
  uint64_t vocab_rows = 0;       // vocabulary size + OOV buckets
  uint64_t category_rows = 50000;

  bool operator==(const ModelDims &) const = default;
};

// Closed-form number of scalar parameters for the given dimensions.
uint64_t ParameterCount(const ModelDims &dims);

template <typename T>
struct AffineLayer {
  Matrix<T> weight;  // out x in
  Vector<T> bias;
  Activation activation = Activation::kRelu;

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }

  // y = act(x W^T + b), one row per example.
  void Forward(const Matrix<T> &x, Matrix<T> &y) const {
    y.noalias() = x * weight.transpose();
    y.rowwise() += bias.transpose();
    if (activation == Activation::kRelu) y = y.cwiseMax(T(0));
  }
};

template <typename T>
struct Params {
  ModelDims dims;
  Matrix<T> unigram;   // vocab_rows x E
  Matrix<T> bigram;    // vocab_rows x E
  Matrix<T> category;  // category_rows x E
  std::array<AffineLayer<T>, kNumTextKinds> text;  // 2E -> D, relu
  AffineLayer<T> category_layer;                    // E -> D, relu
  AffineLayer<T> mention_context;                   // 3D -> D, relu
  AffineLayer<T> mention;                           // 2D -> D, identity
  AffineLayer<T> entity_doc;                        // 2D -> D, relu
  AffineLayer<T> entity;                            // 2D -> D, identity
  T softmax_scale = T(1);  // a
  T hard_scale = T(1);     // a_h
  T hard_offset = T(0);    // b_h

  static Params Zeros(const ModelDims &dims);
  // Embeddings uniform in [-0.05, 0.05]; layer weights Glorot-uniform; zero
  // biases; a = a_h = 1, b_h = 0.
  static Params Random(const ModelDims &dims, uint64_t seed);

  template <typename U>
  Params<U> Cast() const;

  // Visits every parameter block in declaration order as fn(name, data, size).
  template <typename Fn>
  void ForEachBlock(Fn &&fn);
  template <typename Fn>
  void ForEachBlock(Fn &&fn) const;

  uint64_t Size() const;
  bool AllFinite() const;
};

// Row-sparse gradient of an embedding table.
template <typename T>
class SparseRows {
 public:
  SparseRows() = default;
  explicit SparseRows(Eigen::Index width) : width_(width) {}

  // Returns a pointer to the gradient row, creating a zero row if needed.
  T *Row(uint32_t row) {
    auto [it, inserted] = slot_.emplace(row, static_cast<uint32_t>(rows_.size()));
    if (inserted) {
      rows_.push_back(row);
      values_.resize(values_.size() + width_, T(0));
    }
    return values_.data() + static_cast<size_t>(it->second) * width_;
  }
  const T *Find(uint32_t row) const {
    auto it = slot_.find(row);
    return it == slot_.end() ? nullptr : values_.data() + static_cast<size_t>(it->second) * width_;
  }
  T At(uint32_t row, Eigen::Index col) const {
    const T *r = Find(row);
    return r == nullptr ? T(0) : r[col];
  }

  const std::vector<uint32_t> &rows() const { return rows_; }
  const T *RowAt(size_t i) const { return values_.data() + i * width_; }
  Eigen::Index width() const { return width_; }
  void Clear() {
    slot_.clear();
    rows_.clear();
    values_.clear();
  }

 private:
  Eigen::Index width_ = 0;
  std::unordered_map<uint32_t, uint32_t> slot_;
  std::vector<uint32_t> rows_;
  std::vector<T> values_;
};

template <typename T>
struct AffineGrad {
  Matrix<T> weight;
  Vector<T> bias;
};

template <typename T>
struct Gradients {
  SparseRows<T> unigram, bigram, category;
  std::array<AffineGrad<T>, kNumTextKinds> text;
  AffineGrad<T> category_layer, mention_context, mention, entity_doc, entity;
  T softmax_scale = T(0), hard_scale = T(0), hard_offset = T(0);

  static Gradients ZerosLike(const Params<T> &params);
  void SetZero();
  double SquaredNorm() const;
  bool AllFinite() const;
};

// Forward pass of the mention tower over a batch, keeping the activations
// needed by Backward.
template <typename T>
class MentionTower {
 public:
  void Forward(const Params<T> &p, std::span<const EncodedMention *const> batch);
  const Matrix<T> &encodings() const { return final_out_; }
  // Accumulates parameter gradients given d loss / d encodings.
  void Backward(const Params<T> &p, const Matrix<T> &d_encodings, Gradients<T> &g) const;

 private:
  std::vector<const EncodedMention *> batch_;
  std::array<Matrix<T>, 4> text_in_, text_out_;
  Matrix<T> context_in_, context_out_, final_in_, final_out_;
};

template <typename T>
class EntityTower {
 public:
  void Forward(const Params<T> &p, std::span<const EncodedEntity *const> batch);
  const Matrix<T> &encodings() const { return final_out_; }
  void Backward(const Params<T> &p, const Matrix<T> &d_encodings, Gradients<T> &g) const;

 private:
  std::vector<const EncodedEntity *> batch_;
  Matrix<T> title_in_, title_out_, para_in_, para_out_, cat_in_, cat_out_;
  Matrix<T> doc_in_, doc_out_, final_in_, final_out_;
};

// Single-example encoders: the text encoder of one feature kind, the
// category encoder and a compound combination of child encodings.
template <typename T>
Vector<T> EncodeTextFeature(const Params<T> &p, TextKind kind, const EncodedText &text);
template <typename T>
Vector<T> EncodeCategories(const Params<T> &p, std::span<const uint32_t> category_rows);
template <typename T>
Vector<T> Combine(std::span<const Vector<T>> children, const AffineLayer<T> &layer);

// phi(m) and psi(e) for single examples.
template <typename T>
Vector<T> EncodeMentionVector(const Params<T> &p, const EncodedMention &m);
template <typename T>
Vector<T> EncodeEntityVector(const Params<T> &p, const EncodedEntity &e);

// Encodes many examples in fixed-size chunks; one row per input.
Matrix<float> EncodeMentions(const Params<float> &p, std::span<const EncodedMention> mentions);
Matrix<float> EncodeEntities(const Params<float> &p, std::span<const EncodedEntity> entities);

inline constexpr double kDegenerateNorm = 1e-12;

// Cosine similarity clamped to [-1, 1]. Returns 0 and sets *degenerate when
// either norm is below kDegenerateNorm.
double Cosine(std::span<const float> u, std::span<const float> v, bool *degenerate = nullptr);
double Cosine(std::span<const double> u, std::span<const double> v, bool *degenerate = nullptr);

// entries(i, j) = cosine(mentions.row(i), entities.row(j)).
template <typename T>
Matrix<T> SimilarityMatrix(const Matrix<T> &mentions, const Matrix<T> &entities);

// Model file: "DEERMDL1", u32 version, u32 dims (E, D, vocab_rows,
// category_rows), f32 blocks in declaration order, f32 a/a_h/b_h, CRC-32C.
std::vector<uint8_t> SerializeParams(const Params<float> &params);
Params<float> DeserializeParams(std::span<const uint8_t> bytes);
void SaveParams(const Params<float> &params, const std::string &path);
Params<float> LoadParams(const std::string &path);

// Optional import of pre-trained unigram vectors from a whitespace-separated
// text file ("token v1 ... vE" per line). Only in-vocabulary tokens are
// copied. Returns the number of rows filled.
size_t ImportTextEmbeddings(const std::string &path, const NgramVocabulary &vocab,
                            Params<float> &params);

// ---------------------------------------------------------------------------
// Implementation.

namespace internal {

template <typename T>
void MeanRows(const Matrix<T> &table, const std::vector<uint32_t> &ids, T *out) {
  const Eigen::Index width = table.cols();
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dst(out, width);
  dst.setZero();
  if (ids.empty()) return;
  for (uint32_t id : ids) dst += table.row(id).transpose();
  dst /= static_cast<T>(ids.size());
}

template <typename T>
void ScatterMean(const std::vector<uint32_t> &ids, const T *d_mean, Eigen::Index width,
                 SparseRows<T> &grad) {
  if (ids.empty()) return;
  const T scale = T(1) / static_cast<T>(ids.size());
  for (uint32_t id : ids) {
    T *row = grad.Row(id);
    for (Eigen::Index c = 0; c < width; ++c) row[c] += scale * d_mean[c];
  }
}

template <typename T>
void FillTextInput(const Params<T> &p, const EncodedText &text, T *row) {
  const Eigen::Index e = p.dims.embed_dim;
  MeanRows(p.unigram, text.unigrams, row);
  MeanRows(p.bigram, text.bigrams, row + e);
}

template <typename T>
void ScatterTextInput(const Params<T> &p, const EncodedText &text, const T *d_row,
                      Gradients<T> &g) {
  const Eigen::Index e = p.dims.embed_dim;
  ScatterMean(text.unigrams, d_row, e, g.unigram);
  ScatterMean(text.bigrams, d_row + e, e, g.bigram);
}

// Backward through y = act(x W^T + b). d_y is consumed (masked in place).
template <typename T>
void AffineBackward(const AffineLayer<T> &layer, const Matrix<T> &x, const Matrix<T> &y,
                    Matrix<T> &d_y, AffineGrad<T> &g, Matrix<T> *d_x) {
  if (layer.activation == Activation::kRelu) {
    d_y = (y.array() > T(0)).select(d_y, T(0));
  }
  g.weight.noalias() += d_y.transpose() * x;
  g.bias += d_y.colwise().sum().transpose();
  if (d_x != nullptr) d_x->noalias() = d_y * layer.weight;
}

template <typename T>
void InitAffine(AffineLayer<T> &layer, Eigen::Index in, Eigen::Index out, Activation act) {
  layer.weight = Matrix<T>::Zero(out, in);
  layer.bias = Vector<T>::Zero(out);
  layer.activation = act;
}

template <typename T>
AffineGrad<T> ZeroGrad(const AffineLayer<T> &layer) {
  return {Matrix<T>::Zero(layer.out(), layer.in()), Vector<T>::Zero(layer.out())};
}

}  // namespace internal

template <typename T>
Params<T> Params<T>::Zeros(const ModelDims &dims) {
  if (dims.embed_dim == 0 || dims.encode_dim == 0 || dims.vocab_rows == 0 || dims.category_rows == 0) {
    UsageError("model dimensions must be positive");
  }
  const Eigen::Index e = dims.embed_dim, d = dims.encode_dim;
  Params p;
  p.dims = dims;
  p.unigram = Matrix<T>::Zero(static_cast<Eigen::Index>(dims.vocab_rows), e);
  p.bigram = Matrix<T>::Zero(static_cast<Eigen::Index>(dims.vocab_rows), e);
  p.category = Matrix<T>::Zero(static_cast<Eigen::Index>(dims.category_rows), e);
  for (auto &layer : p.text) internal::InitAffine(layer, 2 * e, d, Activation::kRelu);
  internal::InitAffine(p.category_layer, e, d, Activation::kRelu);
  internal::InitAffine(p.mention_context, 3 * d, d, Activation::kRelu);
  internal::InitAffine(p.mention, 2 * d, d, Activation::kIdentity);
  internal::InitAffine(p.entity_doc, 2 * d, d, Activation::kRelu);
  internal::InitAffine(p.entity, 2 * d, d, Activation::kIdentity);
  p.softmax_scale = T(1);
  p.hard_scale = T(1);
  p.hard_offset = T(0);
  return p;
}

template <typename T>
Params<T> Params<T>::Random(const ModelDims &dims, uint64_t seed) {
  Params p = Zeros(dims);
  Rng rng(seed);
  auto fill = [&](Matrix<T> &m, double limit) {
    T *data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = static_cast<T>(rng.Uniform(-limit, limit));
  };
  fill(p.unigram, 0.05);
  fill(p.bigram, 0.05);
  fill(p.category, 0.05);
  auto glorot = [&](AffineLayer<T> &layer) {
    fill(layer.weight, std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out())));
  };
  for (auto &layer : p.text) glorot(layer);
  glorot(p.category_layer);
  glorot(p.mention_context);
  glorot(p.mention);
  glorot(p.entity_doc);
  glorot(p.entity);
  return p;
}

template <typename T>
template <typename Fn>
void Params<T>::ForEachBlock(Fn &&fn) {
  fn("unigram", unigram.data(), unigram.size());
  fn("bigram", bigram.data(), bigram.size());
  fn("category", category.data(), category.size());
  for (int k = 0; k < kNumTextKinds; ++k) {
    std::string name = std::string("text.") + TextKindName(static_cast<TextKind>(k));
    fn(name + ".weight", text[k].weight.data(), text[k].weight.size());
    fn(name + ".bias", text[k].bias.data(), text[k].bias.size());
  }
  auto layer = [&](const char *name, AffineLayer<T> &l) {
    fn(std::string(name) + ".weight", l.weight.data(), l.weight.size());
    fn(std::string(name) + ".bias", l.bias.data(), l.bias.size());
  };
  layer("category_layer", category_layer);
  layer("mention_context", mention_context);
  layer("mention", mention);
  layer("entity_doc", entity_doc);
  layer("entity", entity);
  fn("softmax_scale", &softmax_scale, Eigen::Index(1));
  fn("hard_scale", &hard_scale, Eigen::Index(1));
  fn("hard_offset", &hard_offset, Eigen::Index(1));
}

template <typename T>
template <typename Fn>
void Params<T>::ForEachBlock(Fn &&fn) const {
  const_cast<Params *>(this)->ForEachBlock(
      [&](const std::string &name, T *data, Eigen::Index n) { fn(name, static_cast<const T *>(data), n); });
}

template <typename T>
uint64_t Params<T>::Size() const {
  uint64_t n = 0;
  ForEachBlock([&](const std::string &, const T *, Eigen::Index size) { n += size; });
  return n;
}

template <typename T>
bool Params<T>::AllFinite() const {
  bool ok = true;
  ForEachBlock([&](const std::string &, const T *data, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size && ok; ++i) ok = std::isfinite(data[i]);
  });
  return ok;
}

template <typename T>
template <typename U>
Params<U> Params<T>::Cast() const {
  Params<U> out = Params<U>::Zeros(dims);
  std::vector<const T *> sources;
  ForEachBlock([&](const std::string &, const T *data, Eigen::Index) { sources.push_back(data); });
  size_t i = 0;
  out.ForEachBlock([&](const std::string &, U *data, Eigen::Index size) {
    for (Eigen::Index j = 0; j < size; ++j) data[j] = static_cast<U>(sources[i][j]);
    ++i;
  });
  return out;
}

template <typename T>
Gradients<T> Gradients<T>::ZerosLike(const Params<T> &p) {
  Gradients g;
  g.unigram = SparseRows<T>(p.dims.embed_dim);
  g.bigram = SparseRows<T>(p.dims.embed_dim);
  g.category = SparseRows<T>(p.dims.embed_dim);
  for (int k = 0; k < kNumTextKinds; ++k) g.text[k] = internal::ZeroGrad(p.text[k]);
  g.category_layer = internal::ZeroGrad(p.category_layer);
  g.mention_context = internal::ZeroGrad(p.mention_context);
  g.mention = internal::ZeroGrad(p.mention);
  g.entity_doc = internal::ZeroGrad(p.entity_doc);
  g.entity = internal::ZeroGrad(p.entity);
  return g;
}

template <typename T>
void Gradients<T>::SetZero() {
  unigram.Clear();
  bigram.Clear();
  category.Clear();
  auto zero = [](AffineGrad<T> &a) {
    a.weight.setZero();
    a.bias.setZero();
  };
  for (auto &t : text) zero(t);
  zero(category_layer);
  zero(mention_context);
  zero(mention);
  zero(entity_doc);
  zero(entity);
  softmax_scale = hard_scale = hard_offset = T(0);
}

template <typename T>
double Gradients<T>::SquaredNorm() const {
  double total = 0;
  auto sparse = [&](const SparseRows<T> &s) {
    for (size_t i = 0; i < s.rows().size(); ++i) {
      for (Eigen::Index c = 0; c < s.width(); ++c) total += double(s.RowAt(i)[c]) * s.RowAt(i)[c];
    }
  };
  sparse(unigram);
  sparse(bigram);
  sparse(category);
  auto dense = [&](const AffineGrad<T> &a) {
    total += static_cast<double>(a.weight.squaredNorm() + a.bias.squaredNorm());
  };
  for (const auto &t : text) dense(t);
  dense(category_layer);
  dense(mention_context);
  dense(mention);
  dense(entity_doc);
  dense(entity);
  total += double(softmax_scale) * softmax_scale + double(hard_scale) * hard_scale +
           double(hard_offset) * hard_offset;
  return total;
}

template <typename T>
bool Gradients<T>::AllFinite() const {
  return std::isfinite(SquaredNorm());
}

template <typename T>
void MentionTower<T>::Forward(const Params<T> &p, std::span<const EncodedMention *const> batch) {
  batch_.assign(batch.begin(), batch.end());
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index e = p.dims.embed_dim, d = p.dims.encode_dim;
  static constexpr TextKind kKinds[4] = {kSpanText, kLeftText, kRightText, kSentenceText};
  for (int slot = 0; slot < 4; ++slot) {
    text_in_[slot].resize(b, 2 * e);
    for (Eigen::Index i = 0; i < b; ++i) {
      internal::FillTextInput(p, batch[i]->text[slot], text_in_[slot].row(i).data());
    }
    p.text[kKinds[slot]].Forward(text_in_[slot], text_out_[slot]);
  }
  context_in_.resize(b, 3 * d);
  context_in_ << text_out_[kLeft], text_out_[kRight], text_out_[kSentence];
  p.mention_context.Forward(context_in_, context_out_);
  final_in_.resize(b, 2 * d);
  final_in_ << context_out_, text_out_[kSpan];
  p.mention.Forward(final_in_, final_out_);
}

template <typename T>
void MentionTower<T>::Backward(const Params<T> &p, const Matrix<T> &d_encodings,
                               Gradients<T> &g) const {
  const Eigen::Index d = p.dims.encode_dim;
  static constexpr TextKind kKinds[4] = {kSpanText, kLeftText, kRightText, kSentenceText};
  Matrix<T> d_final = d_encodings;
  Matrix<T> d_final_in;
  internal::AffineBackward(p.mention, final_in_, final_out_, d_final, g.mention, &d_final_in);
  Matrix<T> d_context = d_final_in.leftCols(d);
  Matrix<T> d_context_in;
  internal::AffineBackward(p.mention_context, context_in_, context_out_, d_context,
                           g.mention_context, &d_context_in);
  std::array<Matrix<T>, 4> d_text;
  d_text[kSpan] = d_final_in.rightCols(d);
  d_text[kLeft] = d_context_in.leftCols(d);
  d_text[kRight] = d_context_in.middleCols(d, d);
  d_text[kSentence] = d_context_in.rightCols(d);
  Matrix<T> d_in;
  for (int slot = 0; slot < 4; ++slot) {
    internal::AffineBackward(p.text[kKinds[slot]], text_in_[slot], text_out_[slot], d_text[slot],
                             g.text[kKinds[slot]], &d_in);
    for (size_t i = 0; i < batch_.size(); ++i) {
      internal::ScatterTextInput(p, batch_[i]->text[slot], d_in.row(i).data(), g);
    }
  }
}

template <typename T>
void EntityTower<T>::Forward(const Params<T> &p, std::span<const EncodedEntity *const> batch) {
  batch_.assign(batch.begin(), batch.end());
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index e = p.dims.embed_dim, d = p.dims.encode_dim;
  title_in_.resize(b, 2 * e);
  para_in_.resize(b, 2 * e);
  cat_in_.resize(b, e);
  for (Eigen::Index i = 0; i < b; ++i) {
    internal::FillTextInput(p, batch[i]->title, title_in_.row(i).data());
    internal::FillTextInput(p, batch[i]->paragraph, para_in_.row(i).data());
    internal::MeanRows(p.category, batch[i]->categories, cat_in_.row(i).data());
  }
  p.text[kTitleText].Forward(title_in_, title_out_);
  p.text[kParagraphText].Forward(para_in_, para_out_);
  p.category_layer.Forward(cat_in_, cat_out_);
  doc_in_.resize(b, 2 * d);
  doc_in_ << para_out_, cat_out_;
  p.entity_doc.Forward(doc_in_, doc_out_);
  final_in_.resize(b, 2 * d);
  final_in_ << doc_out_, title_out_;
  p.entity.Forward(final_in_, final_out_);
}

template <typename T>
void EntityTower<T>::Backward(const Params<T> &p, const Matrix<T> &d_encodings,
                              Gradients<T> &g) const {
  const Eigen::Index e = p.dims.embed_dim, d = p.dims.encode_dim;
  Matrix<T> d_final = d_encodings;
  Matrix<T> d_final_in;
  internal::AffineBackward(p.entity, final_in_, final_out_, d_final, g.entity, &d_final_in);
  Matrix<T> d_doc = d_final_in.leftCols(d);
  Matrix<T> d_title = d_final_in.rightCols(d);
  Matrix<T> d_doc_in;
  internal::AffineBackward(p.entity_doc, doc_in_, doc_out_, d_doc, g.entity_doc, &d_doc_in);
  Matrix<T> d_para = d_doc_in.leftCols(d);
  Matrix<T> d_cat = d_doc_in.rightCols(d);
  Matrix<T> d_in;
  internal::AffineBackward(p.text[kTitleText], title_in_, title_out_, d_title, g.text[kTitleText], &d_in);
  for (size_t i = 0; i < batch_.size(); ++i) {
    internal::ScatterTextInput(p, batch_[i]->title, d_in.row(i).data(), g);
  }
  internal::AffineBackward(p.text[kParagraphText], para_in_, para_out_, d_para,
                           g.text[kParagraphText], &d_in);
  for (size_t i = 0; i < batch_.size(); ++i) {
    internal::ScatterTextInput(p, batch_[i]->paragraph, d_in.row(i).data(), g);
  }
  internal::AffineBackward(p.category_layer, cat_in_, cat_out_, d_cat, g.category_layer, &d_in);
  for (size_t i = 0; i < batch_.size(); ++i) {
    internal::ScatterMean(batch_[i]->categories, d_in.row(i).data(), e, g.category);
  }
}

template <typename T>
Vector<T> EncodeTextFeature(const Params<T> &p, TextKind kind, const EncodedText &text) {
  Matrix<T> in(1, 2 * p.dims.embed_dim), out;
  internal::FillTextInput(p, text, in.row(0).data());
  p.text[kind].Forward(in, out);
  return out.row(0).transpose();
}

template <typename T>
Vector<T> EncodeCategories(const Params<T> &p, std::span<const uint32_t> category_rows) {
  Matrix<T> in(1, p.dims.embed_dim), out;
  internal::MeanRows(p.category, std::vector<uint32_t>(category_rows.begin(), category_rows.end()),
                     in.row(0).data());
  p.category_layer.Forward(in, out);
  return out.row(0).transpose();
}

template <typename T>
Vector<T> Combine(std::span<const Vector<T>> children, const AffineLayer<T> &layer) {
  Eigen::Index width = 0;
  for (const auto &c : children) width += c.size();
  if (width != layer.in()) {
    UsageError("combine: children width " + std::to_string(width) + " does not match layer input " +
               std::to_string(layer.in()));
  }
  Matrix<T> in(1, width), out;
  Eigen::Index offset = 0;
  for (const auto &c : children) {
    in.block(0, offset, 1, c.size()) = c.transpose();
    offset += c.size();
  }
  layer.Forward(in, out);
  return out.row(0).transpose();
}

template <typename T>
Vector<T> EncodeMentionVector(const Params<T> &p, const EncodedMention &m) {
  MentionTower<T> tower;
  const EncodedMention *ptr = &m;
  tower.Forward(p, std::span<const EncodedMention *const>(&ptr, 1));
  return tower.encodings().row(0).transpose();
}

template <typename T>
Vector<T> EncodeEntityVector(const Params<T> &p, const EncodedEntity &e) {
  EntityTower<T> tower;
  const EncodedEntity *ptr = &e;
  tower.Forward(p, std::span<const EncodedEntity *const>(&ptr, 1));
  return tower.encodings().row(0).transpose();
}

template <typename T>
Matrix<T> SimilarityMatrix(const Matrix<T> &mentions, const Matrix<T> &entities) {
  if (mentions.rows() != entities.rows()) {
    UsageError("similarity matrix: mention and entity counts differ");
  }
  if (mentions.cols() != entities.cols()) UsageError("similarity matrix: width mismatch");
  auto normalize = [](const Matrix<T> &m) {
    Matrix<T> out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      T norm = m.row(i).norm();
      if (norm < T(kDegenerateNorm)) {
        out.row(i).setZero();
      } else {
        out.row(i) /= norm;
      }
    }
    return out;
  };
  Matrix<T> sims = normalize(mentions) * normalize(entities).transpose();
  return sims.cwiseMax(T(-1)).cwiseMin(T(1));
}

}  // namespace entret

#endif  // ENTRET_MODEL_H_
