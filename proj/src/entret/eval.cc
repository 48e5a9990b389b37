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

#include "entret/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <unordered_set>

#include "json.hpp"

namespace entret {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Shortest text that parses back to the same double.
std::string Num(double v) { return nlohmann::json(v).dump(); }

std::string RecallKey(size_t k) { return "r_at_" + std::to_string(k); }

void SortRows(std::vector<EvalRow> &rows) {
  if (rows.empty()) UsageError("report needs at least one row");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EvalRow &a, const EvalRow &b) { return a.name < b.name; });
  for (const EvalRow &r : rows) {
    if (r.ks != rows.front().ks) UsageError("report rows were evaluated at different k");
  }
}

std::vector<ScoredId> ToScored(const std::vector<Hit> &hits, const VectorStore &store) {
  std::vector<ScoredId> out;
  out.reserve(hits.size());
  for (const Hit &h : hits) out.push_back({store.ids[h.index], h.score});
  return out;
}

}  // namespace

double RecallAtK(const std::vector<std::vector<std::string>> &rankings,
                 const std::vector<std::string> &gold, size_t k) {
  if (k == 0) UsageError("recall needs k >= 1");
  if (rankings.empty()) DataError("recall over an empty query set");
  if (rankings.size() != gold.size()) UsageError("rankings and gold are not aligned");
  size_t hits = 0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    const size_t n = std::min(k, rankings[q].size());
    hits += std::find(rankings[q].begin(), rankings[q].begin() + static_cast<std::ptrdiff_t>(n),
                      gold[q]) != rankings[q].begin() + static_cast<std::ptrdiff_t>(n);
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

RetrieverQuery Retriever::Prepare(const MentionExample &example) const {
  return {JoinTokens(example.features.span.tokens), {}};
}

std::vector<ScoredId> AliasRetriever::Retrieve(const RetrieverQuery &query, size_t k) const {
  return AliasLookup(table_, query.span, k);
}

std::vector<ScoredId> ExtendedAliasRetriever::Retrieve(const RetrieverQuery &query, size_t k) const {
  return AliasLookup(table_, query.span, k);
}

std::vector<ScoredId> Bm25Retriever::Retrieve(const RetrieverQuery &query, size_t k) const {
  return Bm25Search(index_, query.span, k);
}

RetrieverQuery DenseRetriever::Prepare(const MentionExample &example) const {
  Vector<float> v = EncodeMentionVector(params_, EncodeMention(example.features, vocab_));
  return {JoinTokens(example.features.span.tokens), std::vector<float>(v.data(), v.data() + v.size())};
}

std::vector<ScoredId> DenseRetriever::Retrieve(const RetrieverQuery &query, size_t k) const {
  return ToScored(index_.Search(query.vector, k), index_.store());
}

LatencyStats SummarizeLatency(std::vector<double> samples_ms) {
  LatencyStats s;
  s.samples = samples_ms.size();
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) /
              static_cast<double>(samples_ms.size());
  auto rank = [&](double p) {
    size_t r = static_cast<size_t>(std::ceil(p * static_cast<double>(samples_ms.size())));
    return samples_ms[std::clamp<size_t>(r, 1, samples_ms.size()) - 1];
  };
  s.p50_ms = rank(0.50);
  s.p99_ms = rank(0.99);
  return s;
}

double EvalRow::RecallAt(size_t k) const {
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recall[i];
  }
  UsageError("recall at " + std::to_string(k) + " was not evaluated");
}

EvalResult EvaluateRetriever(const Retriever &retriever, const std::vector<MentionExample> &evalset,
                             const EntityCatalog &catalog, const EvalOptions &options) {
  if (options.ks.empty()) UsageError("evaluation needs at least one k");
  for (size_t k : options.ks) {
    if (k == 0) UsageError("evaluation needs k >= 1");
  }
  const size_t max_k = *std::max_element(options.ks.begin(), options.ks.end());
  EvalResult result;
  result.row.name = retriever.name();
  result.row.ks = options.ks;
  std::vector<double> search_ms;
  double encode_ms = 0;
  for (const MentionExample &ex : evalset) {
    if (!catalog.Find(ex.gold_entity_id)) {
      if (options.strict) {
        DataError("mention " + ex.mention_id + ": gold entity " + ex.gold_entity_id +
                  " is not in the catalog");
      }
      result.skipped.push_back(ex.mention_id);
      continue;
    }
    Clock::time_point t0 = Clock::now();
    RetrieverQuery query = retriever.Prepare(ex);
    encode_ms += ElapsedMs(t0);
    Clock::time_point t1 = Clock::now();
    std::vector<ScoredId> hits = retriever.Retrieve(query, max_k);
    search_ms.push_back(ElapsedMs(t1));
    if (hits.size() > max_k) UsageError(retriever.name() + " returned more than k candidates");
    std::vector<std::string> ids;
    ids.reserve(hits.size());
    std::unordered_set<std::string> seen;
    for (ScoredId &h : hits) {
      if (!seen.insert(h.id).second) UsageError(retriever.name() + " returned duplicate " + h.id);
      ids.push_back(std::move(h.id));
    }
    result.rankings.push_back(std::move(ids));
    result.gold.push_back(ex.gold_entity_id);
  }
  for (size_t k : options.ks) result.row.recall.push_back(RecallAtK(result.rankings, result.gold, k));
  result.row.queries = result.gold.size();
  result.row.search = SummarizeLatency(std::move(search_ms));
  result.row.encode_mean_ms = encode_ms / static_cast<double>(result.row.queries);
  return result;
}

LatencyStats LatencyBenchmark(const std::function<void(size_t)> &query_fn, size_t queries,
                              size_t warmup, size_t repeats) {
  if (repeats == 0) UsageError("benchmark needs repeats >= 1");
  if (queries == 0) UsageError("benchmark needs at least one query");
  for (size_t w = 0; w < warmup; ++w) {
    for (size_t q = 0; q < queries; ++q) query_fn(q);
  }
  std::vector<double> samples;
  samples.reserve(queries * repeats);
  for (size_t r = 0; r < repeats; ++r) {
    for (size_t q = 0; q < queries; ++q) {
      Clock::time_point t0 = Clock::now();
      query_fn(q);
      samples.push_back(ElapsedMs(t0));
    }
  }
  return SummarizeLatency(std::move(samples));
}

LatencyStats LatencyBenchmark(const Retriever &retriever, const std::vector<RetrieverQuery> &queries,
                              size_t k, size_t warmup, size_t repeats) {
  size_t sink = 0;
  LatencyStats s = LatencyBenchmark(
      [&](size_t q) { sink += retriever.Retrieve(queries[q], k).size(); }, queries.size(), warmup,
      repeats);
  static_cast<void>(sink);
  return s;
}

std::string FormatReportText(std::vector<EvalRow> rows) {
  SortRows(rows);
  std::vector<std::string> header = {"system"};
  for (size_t k : rows.front().ks) header.push_back("R@" + std::to_string(k));
  for (const char *h : {"mean_ms", "p50_ms", "p99_ms", "encode_ms", "queries"}) header.push_back(h);
  std::vector<std::vector<std::string>> cells = {header};
  char buf[64];
  for (const EvalRow &r : rows) {
    std::vector<std::string> line = {r.name};
    for (double v : r.recall) {
      std::snprintf(buf, sizeof(buf), "%.2f", 100 * v);
      line.push_back(buf);
    }
    for (double v : {r.search.mean_ms, r.search.p50_ms, r.search.p99_ms, r.encode_mean_ms}) {
      std::snprintf(buf, sizeof(buf), "%.4f", v);
      line.push_back(buf);
    }
    line.push_back(std::to_string(r.queries));
    cells.push_back(std::move(line));
  }
  std::vector<size_t> width(header.size(), 0);
  for (const auto &line : cells) {
    for (size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (const auto &line : cells) {
    for (size_t c = 0; c < line.size(); ++c) {
      const size_t pad = width[c] - line[c].size();
      if (c == 0) {
        out += line[c] + std::string(pad, ' ');
      } else {
        out += "  " + std::string(pad, ' ') + line[c];
      }
    }
    out += '\n';
  }
  return out;
}

std::string FormatReportCsv(std::vector<EvalRow> rows) {
  SortRows(rows);
  std::string out = "name";
  for (size_t k : rows.front().ks) out += "," + RecallKey(k);
  out += ",mean_ms,p50_ms,p99_ms,encode_ms,queries\n";
  for (const EvalRow &r : rows) {
    out += r.name;
    for (double v : r.recall) out += "," + Num(v);
    out += "," + Num(r.search.mean_ms) + "," + Num(r.search.p50_ms) + "," + Num(r.search.p99_ms) +
           "," + Num(r.encode_mean_ms) + "," + std::to_string(r.queries) + "\n";
  }
  return out;
}

std::string FormatReportJson(std::vector<EvalRow> rows) {
  SortRows(rows);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const EvalRow &r : rows) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    for (size_t i = 0; i < r.ks.size(); ++i) j[RecallKey(r.ks[i])] = r.recall[i];
    j["mean_ms"] = r.search.mean_ms;
    j["p50_ms"] = r.search.p50_ms;
    j["p99_ms"] = r.search.p99_ms;
    j["encode_ms"] = r.encode_mean_ms;
    j["queries"] = r.queries;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void WriteReports(const std::vector<EvalRow> &rows, const std::string &outdir) {
  const std::filesystem::path dir(outdir);
  WriteTextFile((dir / "report.txt").string(), FormatReportText(rows));
  WriteTextFile((dir / "report.csv").string(), FormatReportCsv(rows));
  WriteTextFile((dir / "report.json").string(), FormatReportJson(rows));
}

double TopKOverlap(const std::vector<std::vector<uint32_t>> &exact,
                   const std::vector<std::vector<uint32_t>> &approx, size_t k) {
  if (exact.size() != approx.size()) UsageError("overlap: result sets are not aligned");
  if (exact.empty() || k == 0) return 0;
  double total = 0;
  for (size_t q = 0; q < exact.size(); ++q) {
    const size_t ne = std::min(k, exact[q].size());
    if (ne == 0) continue;
    std::unordered_set<uint32_t> want(exact[q].begin(), exact[q].begin() + static_cast<std::ptrdiff_t>(ne));
    size_t found = 0;
    for (size_t i = 0; i < std::min(k, approx[q].size()); ++i) found += want.count(approx[q][i]);
    total += static_cast<double>(found) / static_cast<double>(ne);
  }
  return total / static_cast<double>(exact.size());
}

std::vector<std::vector<uint32_t>> ExactNeighbors(const VectorStore &store,
                                                  const Matrix<float> &queries, size_t k) {
  std::vector<std::vector<uint32_t>> out;
  out.reserve(static_cast<size_t>(queries.rows()));
  std::vector<float> q(static_cast<size_t>(queries.cols()));
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    for (Eigen::Index j = 0; j < queries.cols(); ++j) q[static_cast<size_t>(j)] = queries(i, j);
    std::vector<uint32_t> ids;
    for (const Hit &h : SearchBrute(store, q, k)) ids.push_back(h.index);
    out.push_back(std::move(ids));
  }
  return out;
}

BenchmarkRow BenchmarkIndex(const RetrievalIndex &index, const Matrix<float> &queries, size_t k,
                            const std::vector<std::vector<uint32_t>> &exact, size_t warmup,
                            size_t repeats, const std::string &method) {
  const size_t n = static_cast<size_t>(queries.rows());
  std::vector<std::vector<float>> rows(n);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    rows[i].assign(queries.row(r).data(), queries.row(r).data() + queries.cols());
  }
  // Row-major storage is required for the copy above.
  static_assert(Matrix<float>::IsRowMajor);
  std::vector<std::vector<uint32_t>> approx(n);
  for (size_t i = 0; i < n; ++i) {
    for (const Hit &h : index.Search(rows[i], k)) approx[i].push_back(h.index);
  }
  BenchmarkRow row;
  row.method = method;
  row.recall_overlap = TopKOverlap(exact, approx, k);
  size_t sink = 0;
  row.latency = LatencyBenchmark([&](size_t q) { sink += index.Search(rows[q], k).size(); }, n, warmup,
                                 repeats);
  static_cast<void>(sink);
  return row;
}

std::string FormatBenchmarkCsv(const std::vector<BenchmarkRow> &rows) {
  std::string out = "method,mean_ms,p50_ms,p99_ms,recall_overlap\n";
  char buf[256];
  for (const BenchmarkRow &r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", r.method.c_str(), r.latency.mean_ms,
                  r.latency.p50_ms, r.latency.p99_ms, r.recall_overlap);
    out += buf;
  }
  return out;
}

}  // namespace entret
