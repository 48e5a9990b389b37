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


// Acceptance harness. Prints one "criterion N: PASS|FAIL ..." line per
// criterion; runs all of them when no --criterion is given.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entret/baselines.h"
#include "entret/corpus.h"
#include "entret/dataset.h"
#include "entret/eval.h"
#include "entret/index.h"
#include "entret/mining.h"
#include "entret/model.h"
#include "entret/pipeline.h"
#include "entret/training.h"
#include "json.hpp"

namespace entret {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string Format(const char *fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Scratch directory for pipeline runs, removed on destruction.
class WorkDir {
 public:
  explicit WorkDir(const std::string &name)
      : path_(fs::temp_directory_path() / ("entret_acceptance_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~WorkDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string File(const std::string &name) const { return (path_ / name).string(); }
  std::string Dir() const { return path_.string(); }

 private:
  fs::path path_;
};

json ReadJson(const std::string &path) {
  std::vector<uint8_t> bytes = ReadFileBytes(path);
  return json::parse(bytes.begin(), bytes.end());
}

RunConfig PipelineConfig(const WorkDir &dir, uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.outdir = dir.Dir();
  return c;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness.

Outcome GradientCheck() {
  const auto start = Clock::now();
  GradCheckResult r = RunGradientCheck(8, 4, 400, 1);
  const double seconds = Seconds(start);
  std::set<std::string> all;
  ModelDims dims;
  dims.embed_dim = dims.encode_dim = 8;
  dims.vocab_rows = dims.category_rows = 4;
  Params<double>::Zeros(dims).ForEachBlock(
      [&](const std::string &name, const double *, Eigen::Index) { all.insert(name); });
  std::set<std::string> seen(r.families.begin(), r.families.end());
  const bool covered = std::includes(seen.begin(), seen.end(), all.begin(), all.end());
  Outcome o;
  o.pass = r.max_relative_error < 1e-4 && r.coordinates >= 200 && covered && seconds < 60;
  o.detail = Format("max_relative_error=%.3e coordinates=%zu families=%zu/%zu worst=%s seconds=%.1f",
                    r.max_relative_error, r.coordinates, seen.size(), all.size(),
                    r.worst_family.c_str(), seconds);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Loss identities.

Outcome LossIdentities() {
  double worst_uniform = 0;
  for (int b : {2, 4, 100}) {
    for (double fill : {0.0, 0.37}) {
      Matrix<double> sims = Matrix<double>::Constant(b, b, fill);
      worst_uniform = std::max(worst_uniform, std::abs(SoftmaxLossAndGrad(sims, 1.0).loss - std::log(b)));
    }
  }
  double worst_logistic = 0;
  for (int y : {0, 1}) {
    worst_logistic = std::max(worst_logistic, std::abs(LogisticLossAndGrad(0.0, y, 1.0, 0.0).loss - std::log(2.0)));
  }
  double worst_row_sum = 0;
  Rng rng(2);
  for (int b : {2, 4, 100}) {
    Matrix<double> sims(b, b);
    for (Eigen::Index i = 0; i < sims.size(); ++i) sims.data()[i] = rng.Uniform(-1, 1);
    SoftmaxLoss l = SoftmaxLossAndGrad(sims, 7.5);
    worst_row_sum = std::max(worst_row_sum, l.d_logits.rowwise().sum().cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = worst_uniform < 1e-6 && worst_logistic < 1e-9 && worst_row_sum < 1e-9;
  o.detail = Format("|softmax-lnB|=%.2e |logistic-ln2|=%.2e |row_grad_sum|=%.2e", worst_uniform,
                    worst_logistic, worst_row_sum);
  return o;
}

// ---------------------------------------------------------------------------
// 3. End-to-end learning on the default synthetic corpus.

// Fraction of mentions whose normalized span is shared by two or more entities.
double AmbiguousFraction(const std::vector<AnnotatedDocument> &docs) {
  std::map<std::string, std::set<std::string>> entities;
  std::vector<std::string> spans;
  for (const AnnotatedDocument &d : docs) {
    for (const Anchor &a : d.anchors) {
      std::string span = JoinTokens(TokenList(d.tokens.begin() + a.start, d.tokens.begin() + a.end));
      entities[span].insert(a.entity_id);
      spans.push_back(span);
    }
  }
  size_t ambiguous = 0;
  for (const std::string &s : spans) ambiguous += entities[s].size() > 1;
  return spans.empty() ? 0 : static_cast<double>(ambiguous) / static_cast<double>(spans.size());
}

Outcome EndToEndLearning() {
  WorkDir dir("learning");
  RunConfig c = PipelineConfig(dir, 7);
  RunCommand("synth", c);
  EntityCatalog catalog = LoadEntities(dir.File("kb.jsonl"));
  std::vector<AnnotatedDocument> docs = LoadDocuments(dir.File("docs.jsonl"));
  size_t mentions = 0;
  for (const AnnotatedDocument &d : docs) mentions += d.anchors.size();
  const double ambiguous = AmbiguousFraction(docs);
  const auto start = Clock::now();
  RunCommand("train", c);
  const double seconds = Seconds(start);
  json summary = ReadJson(dir.File("train_summary.json"));
  const double r1 = summary["final_r1"];
  const uint64_t steps = summary["steps"];
  Outcome o;
  o.pass = catalog.size() == 200 && mentions == 4000 && ambiguous >= 0.3 && r1 >= 0.95 &&
           steps <= 20000 && seconds < 600;
  o.detail = Format("entities=%zu mentions=%zu ambiguous=%.3f heldout_inbatch_r1=%.4f steps=%llu seconds=%.1f",
                    catalog.size(), mentions, ambiguous, r1, static_cast<unsigned long long>(steps), seconds);
  return o;
}

// ---------------------------------------------------------------------------
// 4. Dense retrieval beats the alias-table prior.

double ReportR1(const json &report, const std::string &name) {
  for (const json &row : report) {
    if (row["name"] == name) return row["r_at_1"];
  }
  return -1;
}

Outcome BeatsAliasTable() {
  Outcome o;
  o.pass = true;
  for (uint64_t seed : {7, 8, 9}) {
    WorkDir dir("alias_" + std::to_string(seed));
    RunConfig c = PipelineConfig(dir, seed);
    RunCommand("synth", c);
    RunCommand("train", c);
    RunCommand("evaluate", c);
    json report = ReadJson(dir.File("report.json"));
    const double deer = ReportR1(report, "DEER"), prior = ReportR1(report, "AT-Prior");
    const double margin = 100 * (deer - prior);
    o.pass = o.pass && margin >= 10;
    o.detail += Format("%sseed %llu: DEER=%.2f AT-Prior=%.2f margin=%.2f", o.detail.empty() ? "" : "; ",
                       static_cast<unsigned long long>(seed), 100 * deer, 100 * prior, margin);
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. Hard-negative mining lift.

// Entities come in surname pairs, so a random batch rarely holds the other
// member of a pair and in-batch negatives alone do not teach the model to
// separate them.
constexpr const char *kAdversarialCorpus =
    "synth_entities=1000\n"
    "synth_families=500\n"
    "synth_mentions_per_entity=20\n"
    "synth_ambiguous_fraction=0.9\n"
    "synth_topic_rate=0.7\n";

Outcome MiningLift() {
  WorkDir dir("mining");
  RunConfig c = PipelineConfig(dir, 11);
  c.Merge(kAdversarialCorpus);
  RunCommand("synth", c);
  RunCommand("train", c);
  fs::copy_file(dir.File("model.bin"), dir.File("initial_model.bin"));
  RunCommand("mine", c);
  json curve = ReadJson(dir.File("mining.json"));

  // Control: the same number of rounds of softmax-only training.
  EntityCatalog catalog = LoadEntities(dir.File("kb.jsonl"));
  std::vector<AnnotatedDocument> docs = LoadDocuments(dir.File("docs.jsonl"));
  NgramVocabulary vocab = NgramVocabulary::Load(dir.File("vocab.bin"));
  Dataset d = BuildDataset(catalog, docs, c.data, 11, vocab);
  Params<float> control = LoadParams(dir.File("initial_model.bin"));
  Trainer(control, d.entities, c.train, 12).Run(d.train, d.heldout);
  const double control_r1 =
      FullCatalogRecallAt1(SnapshotEncodings(control, d.heldout, d.entities, d.entity_ids));

  Outcome o;
  if (curve.size() != 4) {
    o.detail = "expected 4 curve points, got " + std::to_string(curve.size());
    return o;
  }
  const double before = curve[0]["heldout_r1"], after = curve[1]["heldout_r1"];
  const size_t n1 = curve[1]["new_negatives"], n2 = curve[2]["new_negatives"],
               n3 = curve[3]["new_negatives"];
  const double lift = 100 * (after - before);
  o.pass = lift >= 2 && n1 >= n2 && n2 >= n3;
  o.detail = Format("R@1 round0=%.2f round1=%.2f round2=%.2f round3=%.2f lift=%.2f new_negatives=%zu,%zu,%zu "
                    "softmax_only_control=%.2f",
                    100 * before, 100 * after, 100 * curve[2]["heldout_r1"].get<double>(),
                    100 * curve[3]["heldout_r1"].get<double>(), lift, n1, n2, n3, 100 * control_r1);
  return o;
}

// ---------------------------------------------------------------------------
// 6. Approximate search fidelity and speed.

Matrix<float> RandomUnitRows(size_t n, size_t d, Rng &rng) {
  Matrix<float> m(n, d);
  for (size_t i = 0; i < n; ++i) {
    double norm = 0;
    std::vector<double> row(d);
    for (double &x : row) {
      x = rng.Normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (size_t j = 0; j < d; ++j) m(i, j) = static_cast<float>(row[j] / norm);
  }
  return m;
}

struct Timed {
  double mean_ms = 0;
  double overlap = 0;
};

// Overlap with the exact top k and the best of three mean latencies.
Timed Measure(const RetrievalIndex &index, const Matrix<float> &queries, size_t k,
              const std::vector<std::vector<uint32_t>> &exact) {
  Timed t;
  t.mean_ms = std::numeric_limits<double>::infinity();
  for (int repeat = 0; repeat < 3; ++repeat) {
    BenchmarkRow row = BenchmarkIndex(index, queries, k, exact, 1, 1, index.kind());
    t.mean_ms = std::min(t.mean_ms, row.latency.mean_ms);
    t.overlap = row.recall_overlap;
  }
  return t;
}

constexpr uint32_t kTreePartitions = 316;
constexpr uint32_t kTreeProbes = 20;
constexpr uint32_t kTreeReorder = 200;

Outcome AnnFidelity() {
  constexpr size_t kN = 100000, kD = 64, kQueries = 200;
  Rng rng(6);
  Matrix<float> base = RandomUnitRows(kN, kD, rng);
  Matrix<float> queries = RandomUnitRows(kQueries, kD, rng);
  std::vector<std::string> ids(kN);
  for (size_t i = 0; i < kN; ++i) ids[i] = std::to_string(i);

  IndexParams brute_params;
  brute_params.kind = "brute";
  RetrievalIndex brute = BuildIndex(base, ids, brute_params, 1);
  IndexParams ah_params;
  ah_params.kind = "ah";
  ah_params.subspaces = 32;
  ah_params.centers = 16;
  ah_params.reorder = 150;
  RetrievalIndex ah = BuildIndex(base, ids, ah_params, 1);
  IndexParams tree_params = ah_params;
  tree_params.kind = "tree";
  tree_params.partitions = kTreePartitions;
  tree_params.probes = kTreeProbes;
  tree_params.reorder = kTreeReorder;
  RetrievalIndex tree = BuildIndex(base, ids, tree_params, 1);

  const auto exact10 = ExactNeighbors(brute.store(), queries, 10);
  const auto exact100 = ExactNeighbors(brute.store(), queries, 100);
  const Timed b10 = Measure(brute, queries, 10, exact10);
  const Timed b100 = Measure(brute, queries, 100, exact100);
  const Timed a10 = Measure(ah, queries, 10, exact10);
  const Timed t100 = Measure(tree, queries, 100, exact100);
  const double ah_speedup = b10.mean_ms / a10.mean_ms;
  const double tree_speedup = b100.mean_ms / t100.mean_ms;

  // Saturated quantizer: one subspace, one centroid per vector.
  Rng small_rng(7);
  Matrix<float> small = RandomUnitRows(256, kD, small_rng);
  Matrix<float> small_queries = RandomUnitRows(50, kD, small_rng);
  std::vector<std::string> small_ids(ids.begin(), ids.begin() + 256);
  VectorStore store = BuildBrute(small, small_ids);
  AhIndex saturated = BuildAh(store, 1, 256, 1);
  bool exact_match = true;
  for (Eigen::Index i = 0; i < small_queries.rows(); ++i) {
    std::span<const float> q(small_queries.row(i).data(), kD);
    for (size_t k : {10, 256}) exact_match = exact_match && SearchAh(saturated, q, k) == SearchBrute(store, q, k);
  }

  const bool ah_ok = a10.overlap >= 0.9 && ah_speedup >= 5;
  const bool tree_ok = t100.overlap >= 0.8 && tree_speedup >= 20;
  Outcome o;
  o.pass = ah_ok && tree_ok && exact_match;
  o.detail = Format(
      "brute=%.4fms AH(S=32,C=16,R=150) top10_overlap=%.4f speedup=%.2f [%s]; "
      "Tree+AH(P=%u,probes=%u,R=%u) top100_overlap=%.4f speedup=%.2f [%s]; saturated_exact=%s",
      b10.mean_ms, a10.overlap, ah_speedup, ah_ok ? "ok" : "miss", kTreePartitions, kTreeProbes,
      kTreeReorder, t100.overlap, tree_speedup, tree_ok ? "ok" : "miss", exact_match ? "yes" : "no");
  return o;
}

// ---------------------------------------------------------------------------
// 7. Baseline oracles.

MentionExample Mention(const std::string &span, const std::string &gold) {
  MentionExample m;
  m.mention_id = span + "/" + gold;
  m.features.span.tokens = Tokenize(span);
  m.gold_entity_id = gold;
  return m;
}

// Okapi BM25 written out term by term from the formula.
std::map<std::string, double> OracleBm25(const std::vector<std::pair<std::string, std::string>> &docs,
                                         const std::string &query, double k1, double b) {
  std::vector<TokenList> tokens;
  double total = 0;
  for (const auto &d : docs) {
    tokens.push_back(Tokenize(d.second));
    total += static_cast<double>(tokens.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;
  TokenList q = Tokenize(query);
  std::set<std::string> terms(q.begin(), q.end());
  std::map<std::string, double> out;
  for (size_t i = 0; i < docs.size(); ++i) {
    double score = 0;
    bool matched = false;
    for (const std::string &t : terms) {
      const double tf = static_cast<double>(std::count(tokens[i].begin(), tokens[i].end(), t));
      if (tf == 0) continue;
      matched = true;
      double df = 0;
      for (const TokenList &d : tokens) df += std::find(d.begin(), d.end(), t) != d.end();
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(tokens[i].size());
      score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
    }
    if (matched) out[docs[i].first] = score;
  }
  return out;
}

Outcome BaselineOracles() {
  // Ten (span, entity) pairs with priors worked out by hand.
  std::vector<MentionExample> toy = {
      Mention("Costa", "Q1"),       Mention("costa", "Q1"), Mention("COSTA", "Q1"),
      Mention("Costa", "Q2"),       Mention("Jorge Costa", "Q1"),
      Mention("Paris", "Q3"),       Mention("paris", "Q3"), Mention("Paris", "Q4"),
      Mention("Paris", "Q3"),       Mention("Lyon", "Q5"),
  };
  const std::map<std::string, std::vector<ScoredId>> expected = {
      {"costa", {{"Q1", 3.0 / 4.0}, {"Q2", 1.0 / 4.0}}},
      {"jorge costa", {{"Q1", 1.0}}},
      {"paris", {{"Q3", 3.0 / 4.0}, {"Q4", 1.0 / 4.0}}},
      {"lyon", {{"Q5", 1.0}}},
  };
  AliasTable table = BuildAliasTable(toy);
  bool toy_ok = table.entries == expected;

  // 150 entities under one alias: E000..E049 twice, E050..E149 once.
  std::vector<MentionExample> crowd;
  for (int e = 0; e < 150; ++e) {
    const std::string id = Format("E%03d", e);
    for (int c = 0; c < (e < 50 ? 2 : 1); ++c) crowd.push_back(Mention("the crowd", id));
  }
  const AliasTable crowd_table = BuildAliasTable(crowd);
  const std::vector<ScoredId> *list = crowd_table.Find("the crowd");
  bool truncation_ok = list != nullptr && list->size() == 100;
  for (int i = 0; truncation_ok && i < 100; ++i) {
    const ScoredId want{Format("E%03d", i), i < 50 ? 2.0 / 200.0 : 1.0 / 200.0};
    truncation_ok = (*list)[static_cast<size_t>(i)] == want;
  }

  // BM25 against the formula on a randomized 20-title corpus.
  const std::vector<std::string> words = {"river", "north", "john", "smith", "city", "hall",
                                          "park",  "lake",  "mary", "saint", "port", "bay"};
  Rng rng(7);
  std::vector<std::pair<std::string, std::string>> docs;
  EntityCatalog catalog;
  for (int i = 0; i < 20; ++i) {
    std::string title;
    const uint64_t len = 1 + rng.Below(4);
    for (uint64_t w = 0; w < len; ++w) title += (w ? " " : "") + words[rng.Below(words.size())];
    docs.push_back({Format("T%02d", i), title});
    catalog.Add({docs.back().first, title, "", {}});
  }
  Bm25Params params;
  Bm25Index index = BuildBm25(catalog, params);
  double worst = 0;
  size_t compared = 0;
  bool same_sets = true;
  for (const std::string &a : words) {
    for (const std::string &b : {std::string("john"), std::string("lake bay"), std::string("")}) {
      const std::string query = a + " " + b;
      std::map<std::string, double> want = OracleBm25(docs, query, params.k1, params.b);
      std::vector<ScoredId> got = Bm25Search(index, query, 100);
      same_sets = same_sets && got.size() == want.size();
      for (const ScoredId &h : got) {
        auto it = want.find(h.id);
        if (it == want.end()) {
          same_sets = false;
          continue;
        }
        worst = std::max(worst, std::abs(h.score - it->second));
        ++compared;
      }
    }
  }
  Outcome o;
  o.pass = toy_ok && truncation_ok && same_sets && worst < 1e-9;
  o.detail = Format("toy_priors=%s truncation_100_of_150=%s bm25_scores_compared=%zu max_abs_error=%.2e",
                    toy_ok ? "exact" : "mismatch", truncation_ok ? "exact" : "mismatch", compared, worst);
  return o;
}

// ---------------------------------------------------------------------------
// 8. Context sensitivity.

// Two topic words of 'entity' on each side of its surname.
std::string TopicContext(uint32_t entity, uint32_t families) {
  return SyntheticTopicWord(entity, 0) + " " + SyntheticTopicWord(entity, 1) + " " +
         SyntheticSurname(entity % families) + " " + SyntheticTopicWord(entity, 2) + " " +
         SyntheticTopicWord(entity, 3);
}

std::string TopId(RunConfig c, const std::string &span, const std::string &context) {
  c.span = span;
  c.context = context;
  c.k = 1;
  json out = json::parse(RunCommand("query", c));
  return out["results"].empty() ? "" : out["results"][0]["id"].get<std::string>();
}

Outcome ContextSensitivity() {
  WorkDir dir("context");
  RunConfig c = PipelineConfig(dir, 7);
  RunCommand("synth", c);
  RunCommand("train", c);
  const uint32_t families = c.synth.families;
  // Entities 0 and 'families' share surname 0.
  const std::string span = SyntheticSurname(0);
  const std::string a = TopId(c, span, TopicContext(0, families));
  const std::string b = TopId(c, span, TopicContext(families, families));
  const std::string want_a = "Q1", want_b = "Q" + std::to_string(families + 1);

  // Every family, as a broader check on the same model.
  size_t pairs_ok = 0;
  for (uint32_t f = 0; f < families; ++f) {
    const std::string s = SyntheticSurname(f);
    pairs_ok += TopId(c, s, TopicContext(f, families)) == "Q" + std::to_string(f + 1) &&
                TopId(c, s, TopicContext(f + families, families)) == "Q" + std::to_string(f + families + 1);
  }
  Outcome o;
  o.pass = a == want_a && b == want_b && a != b;
  o.detail = Format("span '%s': context A -> %s (want %s), context B -> %s (want %s); families correct %zu/%u",
                    span.c_str(), a.c_str(), want_a.c_str(), b.c_str(), want_b.c_str(), pairs_ok, families);
  return o;
}

// ---------------------------------------------------------------------------
// 9. Determinism.

Outcome Determinism() {
  std::vector<std::vector<uint8_t>> files[2];
  const std::vector<std::string> names = {"vocab.bin", "model.bin", "index.bin", "mining.csv"};
  for (int run = 0; run < 2; ++run) {
    WorkDir dir("determinism_" + std::to_string(run));
    RunConfig c = PipelineConfig(dir, 3);
    c.Merge("max_steps=1000\nmine_rounds=3\nmine_max_steps=400\n");
    for (const char *command : {"synth", "train", "mine", "build-index"}) RunCommand(command, c);
    for (const std::string &n : names) files[run].push_back(ReadFileBytes(dir.File(n)));
  }
  Outcome o;
  o.pass = true;
  for (size_t i = 0; i < names.size(); ++i) {
    const bool same = files[0][i] == files[1][i];
    o.pass = o.pass && same;
    o.detail += Format("%s%s=%s(%zu bytes)", i ? " " : "", names[i].c_str(), same ? "identical" : "DIFFERENT",
                       files[0][i].size());
  }
  return o;
}

// ---------------------------------------------------------------------------

const std::vector<std::function<Outcome()>> &Criteria() {
  static const std::vector<std::function<Outcome()>> criteria = {
      GradientCheck,       LossIdentities, EndToEndLearning, BeatsAliasTable,   MiningLift,
      AnnFidelity,         BaselineOracles, ContextSensitivity, Determinism,
  };
  return criteria;
}

bool RunCriterion(size_t n) {
  Outcome o;
  try {
    o = Criteria()[n - 1]();
  } catch (const std::exception &e) {
    o.pass = false;
    o.detail = std::string("error: ") + e.what();
  }
  std::printf("criterion %zu: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace
}  // namespace entret

int main(int argc, char **argv) {
  CLI::App app{"Acceptance criteria"};
  size_t criterion = 0;
  app.add_option("--criterion", criterion, "Criterion to run (1-9); all when omitted")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  bool ok = true;
  if (criterion != 0) {
    ok = entret::RunCriterion(criterion);
  } else {
    for (size_t n = 1; n <= entret::Criteria().size(); ++n) ok = entret::RunCriterion(n) && ok;
  }
  return ok ? 0 : 1;
}
