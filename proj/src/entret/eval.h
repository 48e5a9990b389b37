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

// Recall@k evaluation of retrievers, latency measurement and report
// rendering.

#ifndef ENTRET_EVAL_H_
#define ENTRET_EVAL_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "entret/baselines.h"
#include "entret/corpus.h"
#include "entret/index.h"
#include "entret/model.h"

namespace entret {

// Mean over queries of [gold in the first k]. Throws on an empty or
// misaligned query set.
double RecallAtK(const std::vector<std::vector<std::string>> &rankings,
                 const std::vector<std::string> &gold, size_t k);

// What a retriever needs per query. Discrete retrievers use the span text,
// dense ones the encoded mention.
struct RetrieverQuery {
  std::string span;
  std::vector<float> vector;
};

class Retriever {
 public:
  virtual ~Retriever() = default;

  virtual std::string name() const = 0;

  // Query preparation (encoding); timed separately from search.
  virtual RetrieverQuery Prepare(const MentionExample &example) const;

  // At most k distinct ids, best first.
  virtual std::vector<ScoredId> Retrieve(const RetrieverQuery &query, size_t k) const = 0;
};

class AliasRetriever : public Retriever {
 public:
  AliasRetriever(const AliasTable &table, std::string name = "AT-Prior")
      : table_(table), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<ScoredId> Retrieve(const RetrieverQuery &query, size_t k) const override;

 private:
  const AliasTable &table_;
  std::string name_;
};

class ExtendedAliasRetriever : public Retriever {
 public:
  ExtendedAliasRetriever(const ExtendedAliasTable &table, std::string name = "AT-Ext")
      : table_(table), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<ScoredId> Retrieve(const RetrieverQuery &query, size_t k) const override;

 private:
  const ExtendedAliasTable &table_;
  std::string name_;
};

class Bm25Retriever : public Retriever {
 public:
  Bm25Retriever(const Bm25Index &index, std::string name = "BM25")
      : index_(index), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<ScoredId> Retrieve(const RetrieverQuery &query, size_t k) const override;

 private:
  const Bm25Index &index_;
  std::string name_;
};

// Mention tower plus a nearest-neighbor index over entity encodings.
class DenseRetriever : public Retriever {
 public:
  DenseRetriever(const Params<float> &params, const NgramVocabulary &vocab,
                 const RetrievalIndex &index, std::string name)
      : params_(params), vocab_(vocab), index_(index), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  RetrieverQuery Prepare(const MentionExample &example) const override;
  std::vector<ScoredId> Retrieve(const RetrieverQuery &query, size_t k) const override;

 private:
  const Params<float> &params_;
  const NgramVocabulary &vocab_;
  const RetrievalIndex &index_;
  std::string name_;
};

struct LatencyStats {
  double mean_ms = 0;
  double p50_ms = 0;
  double p99_ms = 0;
  size_t samples = 0;
};

// Nearest-rank percentiles over the samples.
LatencyStats SummarizeLatency(std::vector<double> samples_ms);

struct EvalRow {
  std::string name;
  std::vector<size_t> ks;
  std::vector<double> recall;  // aligned with ks
  LatencyStats search;
  double encode_mean_ms = 0;
  size_t queries = 0;

  double RecallAt(size_t k) const;  // throws if k was not evaluated
};

struct EvalResult {
  EvalRow row;
  std::vector<std::vector<std::string>> rankings;
  std::vector<std::string> gold;
  std::vector<std::string> skipped;  // mention ids with unknown gold (non-strict)
};

struct EvalOptions {
  std::vector<size_t> ks = {1, 100};
  // When false, mentions whose gold is not in the catalog are skipped and
  // listed instead of failing the run.
  bool strict = true;
};

// One retrieval pass at max(ks) per mention; every query is timed.
EvalResult EvaluateRetriever(const Retriever &retriever, const std::vector<MentionExample> &evalset,
                             const EntityCatalog &catalog, const EvalOptions &options = {});

// Single-threaded: 'warmup' untimed passes, then 'repeats' timed passes
// over all queries, one sample per query.
LatencyStats LatencyBenchmark(const Retriever &retriever, const std::vector<RetrieverQuery> &queries,
                              size_t k, size_t warmup, size_t repeats);
LatencyStats LatencyBenchmark(const std::function<void(size_t)> &query_fn, size_t queries,
                              size_t warmup, size_t repeats);

// Rows sorted by name. The text form is an aligned table.
std::string FormatReportText(std::vector<EvalRow> rows);
std::string FormatReportCsv(std::vector<EvalRow> rows);
std::string FormatReportJson(std::vector<EvalRow> rows);
void WriteReports(const std::vector<EvalRow> &rows, const std::string &outdir);

// Fraction of the exact top k found in the approximate top k, averaged over
// queries.
double TopKOverlap(const std::vector<std::vector<uint32_t>> &exact,
                   const std::vector<std::vector<uint32_t>> &approx, size_t k);

struct BenchmarkRow {
  std::string method;
  LatencyStats latency;
  double recall_overlap = 0;
};

// Times index.Search over the query rows and measures overlap with the
// exact top k.
BenchmarkRow BenchmarkIndex(const RetrievalIndex &index, const Matrix<float> &queries, size_t k,
                            const std::vector<std::vector<uint32_t>> &exact, size_t warmup,
                            size_t repeats, const std::string &method);

std::vector<std::vector<uint32_t>> ExactNeighbors(const VectorStore &store,
                                                  const Matrix<float> &queries, size_t k);

// "method,mean_ms,p50_ms,p99_ms,recall_overlap".
std::string FormatBenchmarkCsv(const std::vector<BenchmarkRow> &rows);

}  // namespace entret

#endif  // ENTRET_EVAL_H_
