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

#include "entret/pipeline.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

#include "entret/eval.h"
#include "entret/model.h"
#include "json.hpp"

namespace entret {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Config keys.

std::string FormatDouble(double v) { return nlohmann::json(v).dump(); }

void Assign(std::string &dst, const std::string &, const std::string &v) { dst = v; }
void Assign(double &dst, const std::string &key, const std::string &v) {
  dst = ParseNumber<double>(key, v);
  if (!std::isfinite(dst)) UsageError("non-finite value for '" + key + "'");
}
void Assign(uint32_t &dst, const std::string &key, const std::string &v) {
  dst = ParseNumber<uint32_t>(key, v);
}
void Assign(uint64_t &dst, const std::string &key, const std::string &v) {
  dst = ParseNumber<uint64_t>(key, v);
}
void Assign(bool &dst, const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") {
    dst = true;
  } else if (v == "false" || v == "0") {
    dst = false;
  } else {
    UsageError("invalid boolean for '" + key + "': " + v);
  }
}
void Assign(std::optional<uint64_t> &dst, const std::string &key, const std::string &v) {
  dst = ParseNumber<uint64_t>(key, v);
}
void Assign(std::vector<size_t> &dst, const std::string &key, const std::string &v) {
  std::vector<size_t> out;
  size_t pos = 0;
  while (pos <= v.size()) {
    size_t comma = v.find(',', pos);
    if (comma == std::string::npos) comma = v.size();
    size_t k = ParseNumber<size_t>(key, v.substr(pos, comma - pos));
    if (k == 0) UsageError("'" + key + "' entries must be >= 1");
    out.push_back(k);
    pos = comma + 1;
  }
  dst = std::move(out);
}
void Assign(AliasExtensionMode &dst, const std::string &, const std::string &v) {
  dst = ParseAliasExtensionMode(v);
}

std::string Show(const std::string &v) { return v; }
std::string Show(double v) { return FormatDouble(v); }
std::string Show(uint32_t v) { return std::to_string(v); }
std::string Show(uint64_t v) { return std::to_string(v); }
std::string Show(bool v) { return v ? "true" : "false"; }
std::string Show(const std::optional<uint64_t> &v) { return v ? std::to_string(*v) : ""; }
std::string Show(const std::vector<size_t> &v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}
std::string Show(AliasExtensionMode v) {
  return v == AliasExtensionMode::kMerged ? "merged" : "precedence";
}

struct KeySpec {
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

template <typename Access>
KeySpec Field(const std::string &name, Access access) {
  return {[name, access](RunConfig &c, const std::string &v) { Assign(access(c), name, v); },
          [access](const RunConfig &c) { return Show(access(const_cast<RunConfig &>(c))); }};
}

#define ENTRET_KEY(name, expr) \
  {name, Field(name, [](RunConfig &c) -> auto & { return expr; })}

const std::map<std::string, KeySpec> &KeyTable() {
  static const std::map<std::string, KeySpec> table = {
      ENTRET_KEY("kb", c.kb),
      ENTRET_KEY("docs", c.docs),
      ENTRET_KEY("vocab", c.vocab),
      ENTRET_KEY("model", c.model),
      ENTRET_KEY("index", c.index),
      ENTRET_KEY("outdir", c.outdir),
      ENTRET_KEY("seed", c.seed),
      ENTRET_KEY("embed_dim", c.embed_dim),
      ENTRET_KEY("encode_dim", c.encode_dim),
      ENTRET_KEY("batch_size", c.train.batch_size),
      ENTRET_KEY("learning_rate", c.train.learning_rate),
      ENTRET_KEY("momentum", c.train.momentum),
      ENTRET_KEY("max_steps", c.train.max_steps),
      ENTRET_KEY("eval_every", c.train.eval_every),
      ENTRET_KEY("patience", c.train.patience),
      ENTRET_KEY("min_improvement", c.train.min_improvement),
      ENTRET_KEY("holdout", c.data.holdout_fraction),
      ENTRET_KEY("max_vocab", c.data.max_vocab),
      ENTRET_KEY("oov_buckets", c.data.oov_buckets),
      ENTRET_KEY("category_rows", c.data.category_rows),
      ENTRET_KEY("mine_rounds", c.mine_rounds),
      ENTRET_KEY("mine_k", c.mine_k),
      ENTRET_KEY("mine_max_steps", c.mine_max_steps),
      ENTRET_KEY("index_kind", c.index_params.kind),
      ENTRET_KEY("subspaces", c.index_params.subspaces),
      ENTRET_KEY("centers", c.index_params.centers),
      ENTRET_KEY("partitions", c.index_params.partitions),
      ENTRET_KEY("probes", c.index_params.probes),
      ENTRET_KEY("reorder", c.index_params.reorder),
      ENTRET_KEY("bm25_k1", c.bm25.k1),
      ENTRET_KEY("bm25_b", c.bm25.b),
      ENTRET_KEY("alias_mode", c.alias_mode),
      ENTRET_KEY("eval_ks", c.eval_ks),
      ENTRET_KEY("strict", c.strict),
      ENTRET_KEY("synth_entities", c.synth.entities),
      ENTRET_KEY("synth_families", c.synth.families),
      ENTRET_KEY("synth_topic_vocab", c.synth.topic_vocab),
      ENTRET_KEY("synth_mentions_per_entity", c.synth.mentions_per_entity),
      ENTRET_KEY("synth_ambiguous_fraction", c.synth.ambiguous_fraction),
      ENTRET_KEY("synth_topic_rate", c.synth.topic_rate),
      ENTRET_KEY("synth_sentences_per_doc", c.synth.sentences_per_doc),
      ENTRET_KEY("span", c.span),
      ENTRET_KEY("context", c.context),
      ENTRET_KEY("k", c.k),
      ENTRET_KEY("bench_vectors", c.bench_vectors),
      ENTRET_KEY("bench_dim", c.bench_dim),
      ENTRET_KEY("bench_queries", c.bench_queries),
      ENTRET_KEY("bench_k", c.bench_k),
      ENTRET_KEY("bench_warmup", c.bench_warmup),
      ENTRET_KEY("bench_repeats", c.bench_repeats),
      ENTRET_KEY("dims", c.dims),
      ENTRET_KEY("batch", c.batch),
      ENTRET_KEY("samples", c.samples),
  };
  return table;
}

#undef ENTRET_KEY

// ---------------------------------------------------------------------------
// Command plumbing.

uint64_t DeriveSeed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Salt : uint64_t { kInitSalt = 1, kTrainSalt, kMineSalt, kIndexSalt, kBenchSalt };

class Run {
 public:
  Run(std::string command, const RunConfig &config)
      : command_(std::move(command)), config_(config), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(config_.outdir, ec);
    if (ec) DataError("cannot create outdir " + config_.outdir + ": " + ec.message());
  }

  const RunConfig &config() const { return config_; }

  // Resolves an input path, defaulting to outdir/name, and records it.
  std::string Input(const std::string &path, const char *name, const char *key) {
    std::string p = path.empty() ? Output(name, false) : path;
    if (!fs::is_regular_file(p)) {
      UsageError("missing input " + p + " (set '" + std::string(key) + "')");
    }
    std::vector<uint8_t> bytes = ReadFileBytes(p);
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", Crc32c(bytes));
    inputs_[p] = crc;
    return p;
  }

  // Same, but absent files are allowed.
  std::optional<std::string> OptionalInput(const std::string &path, const char *name,
                                           const char *key) {
    std::string p = path.empty() ? Output(name, false) : path;
    if (path.empty() && !fs::is_regular_file(p)) return std::nullopt;
    return Input(p, name, key);
  }

  std::string Output(const char *name, bool record = true) {
    std::string p = (fs::path(config_.outdir) / name).string();
    if (record) outputs_.push_back(p);
    return p;
  }

  void WriteManifest(const std::string &status, const std::string &error) const {
    ordered_json m;
    m["command"] = command_;
    m["version"] = std::string(kVersion);
    m["formats"] = {{"model", "DEERMDL1"}, {"vocab", "DEERVOC1"}, {"index", "DEERIDX1"}};
    if (config_.seed) {
      m["seed"] = *config_.seed;
    } else {
      m["seed"] = nullptr;
    }
    ordered_json cfg;
    for (const auto &[k, v] : config_.Snapshot()) cfg[k] = v;
    m["config"] = cfg;
    ordered_json in = ordered_json::object();
    for (const auto &[p, crc] : inputs_) in[p] = crc;
    m["inputs"] = in;
    m["outputs"] = outputs_;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    WriteTextFile((fs::path(config_.outdir) / "run_manifest.json").string(),
                  m.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n");
  }

 private:
  std::string command_;
  const RunConfig &config_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

struct Loaded {
  EntityCatalog catalog;
  std::vector<AnnotatedDocument> docs;
};

Loaded LoadCorpus(Run &run) {
  const RunConfig &c = run.config();
  Loaded l;
  l.catalog = LoadEntities(run.Input(c.kb, "kb.jsonl", "kb"));
  l.docs = LoadDocuments(run.Input(c.docs, "docs.jsonl", "docs"));
  return l;
}

Params<float> LoadModelFor(Run &run, const NgramVocabulary &vocab) {
  Params<float> params = LoadParams(run.Input(run.config().model, "model.bin", "model"));
  if (params.dims.vocab_rows != vocab.rows()) {
    DataError("model has " + std::to_string(params.dims.vocab_rows) +
              " vocabulary rows but the vocabulary needs " + std::to_string(vocab.rows()));
  }
  return params;
}

NgramVocabulary LoadVocabFor(Run &run) {
  return NgramVocabulary::Load(run.Input(run.config().vocab, "vocab.bin", "vocab"));
}

std::string Summary(const ordered_json &j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Commands.

std::string Synth(Run &run) {
  const RunConfig &c = run.config();
  SyntheticCorpus corpus = GenerateSynthetic(c.synth, c.RequireSeed());
  WriteEntities(corpus.catalog, run.Output("kb.jsonl"));
  WriteDocuments(corpus.documents, run.Output("docs.jsonl"));
  size_t mentions = 0;
  for (const AnnotatedDocument &d : corpus.documents) mentions += d.anchors.size();
  return Summary({{"entities", corpus.catalog.size()},
                  {"documents", corpus.documents.size()},
                  {"mentions", mentions}});
}

std::string Ingest(Run &run) {
  const RunConfig &c = run.config();
  Loaded l = LoadCorpus(run);
  Dataset d = BuildDataset(l.catalog, l.docs, c.data, c.RequireSeed());
  d.vocab.Save(run.Output("vocab.bin"));
  ordered_json j = {{"entities", d.catalog.size()},
                    {"documents", l.docs.size()},
                    {"train_mentions", d.split.train.size()},
                    {"heldout_mentions", d.split.heldout.size()},
                    {"vocab_size", d.vocab.size()},
                    {"oov_buckets", d.vocab.oov_buckets()}};
  WriteTextFile(run.Output("ingest_summary.json"), Summary(j));
  return Summary(j);
}

std::string Train(Run &run) {
  const RunConfig &c = run.config();
  const uint64_t seed = c.RequireSeed();
  ValidateTrainConfig(c.train);
  Loaded l = LoadCorpus(run);
  Dataset d = c.vocab.empty()
                  ? BuildDataset(l.catalog, l.docs, c.data, seed)
                  : BuildDataset(l.catalog, l.docs, c.data, seed, LoadVocabFor(run));
  ModelDims dims;
  dims.embed_dim = c.embed_dim;
  dims.encode_dim = c.encode_dim;
  dims.vocab_rows = d.vocab.rows();
  dims.category_rows = c.data.category_rows;
  Params<float> params = Params<float>::Random(dims, DeriveSeed(seed, kInitSalt));
  Trainer trainer(params, d.entities, c.train, DeriveSeed(seed, kTrainSalt));
  TrainReport report = trainer.Run(d.train, d.heldout);
  if (!params.AllFinite()) NumericError("training produced non-finite parameters");
  d.vocab.Save(run.Output("vocab.bin"));
  SaveParams(params, run.Output("model.bin"));
  WriteTextFile(run.Output("train_log.csv"), report.LogCsv());
  WriteTextFile(run.Output("train_summary.json"), report.SummaryJson());
  return report.SummaryJson();
}

std::string Mine(Run &run) {
  const RunConfig &c = run.config();
  const uint64_t seed = c.RequireSeed();
  Loaded l = LoadCorpus(run);
  NgramVocabulary vocab = LoadVocabFor(run);
  Params<float> params = LoadModelFor(run, vocab);
  Dataset d = BuildDataset(l.catalog, l.docs, c.data, seed, vocab);
  MiningConfig mc;
  mc.rounds = c.mine_rounds;
  mc.neighbors = c.mine_k;
  mc.train = c.train;
  if (c.mine_max_steps != 0) mc.train.max_steps = c.mine_max_steps;
  ValidateTrainConfig(mc.train);
  MiningData data{&d.train, &d.heldout, &d.entities, &d.entity_ids};
  MiningReport report = RunIterativeMining(params, data, mc, DeriveSeed(seed, kMineSalt));
  if (!params.AllFinite()) NumericError("mining produced non-finite parameters");
  SaveParams(params, run.Output("model.bin"));
  WriteTextFile(run.Output("mining.csv"), report.Csv());
  WriteTextFile(run.Output("mining.json"), report.Json());
  return report.Csv();
}

Matrix<float> CatalogEncodings(const EntityCatalog &catalog, const NgramVocabulary &vocab,
                               const Params<float> &params) {
  return EncodeEntities(params, EncodeCatalog(catalog, vocab, params.dims.category_rows));
}

std::vector<std::string> CatalogIds(const EntityCatalog &catalog) {
  std::vector<std::string> ids;
  ids.reserve(catalog.size());
  for (const EntityRecord &r : catalog.records()) ids.push_back(r.id);
  return ids;
}

std::string BuildIndexCommand(Run &run) {
  const RunConfig &c = run.config();
  EntityCatalog catalog = LoadEntities(run.Input(c.kb, "kb.jsonl", "kb"));
  NgramVocabulary vocab = LoadVocabFor(run);
  Params<float> params = LoadModelFor(run, vocab);
  RetrievalIndex index = BuildIndex(CatalogEncodings(catalog, vocab, params), CatalogIds(catalog),
                                    c.index_params, DeriveSeed(c.RequireSeed(), kIndexSalt));
  SaveIndex(index, run.Output("index.bin"));
  const IndexParams &p = index.params;
  return Summary({{"kind", index.kind()},
                  {"entities", index.store().size()},
                  {"subspaces", p.subspaces},
                  {"centers", p.centers},
                  {"partitions", p.partitions},
                  {"probes", p.probes},
                  {"reorder", p.reorder}});
}

std::string DenseName(const RetrievalIndex &index) {
  const std::string kind = index.kind();
  if (kind == "ah") return "DEER-AH";
  if (kind == "tree") return "DEER-Tree+AH";
  return "DEER";
}

std::string Evaluate(Run &run) {
  const RunConfig &c = run.config();
  const uint64_t seed = c.RequireSeed();
  Loaded l = LoadCorpus(run);
  NgramVocabulary vocab = LoadVocabFor(run);
  Params<float> params = LoadModelFor(run, vocab);
  Dataset d = BuildDataset(l.catalog, l.docs, c.data, seed, vocab);

  IndexParams brute_params;
  brute_params.kind = "brute";
  RetrievalIndex brute =
      BuildIndex(CatalogEncodings(d.catalog, vocab, params), d.entity_ids, brute_params, 0);
  std::optional<RetrievalIndex> ann;
  if (auto path = run.OptionalInput(c.index, "index.bin", "index")) {
    ann = LoadIndex(*path);
    if (ann->kind() == "brute") ann.reset();
  }

  AliasTable alias = BuildAliasTable(d.split.train);
  ExtendedAliasTable extended = ExtendAliasTable(alias, d.split.train, c.alias_mode);
  Bm25Index bm25 = BuildBm25(d.catalog, c.bm25);
  SaveAliasTable(alias, run.Output("alias_table.jsonl"));

  DenseRetriever dense(params, vocab, brute, "DEER");
  AliasRetriever at_prior(alias);
  ExtendedAliasRetriever at_ext(extended);
  Bm25Retriever bm25_retriever(bm25);
  std::vector<const Retriever *> systems = {&dense, &at_prior, &at_ext, &bm25_retriever};
  std::optional<DenseRetriever> dense_ann;
  if (ann) {
    dense_ann.emplace(params, vocab, *ann, DenseName(*ann));
    systems.push_back(&*dense_ann);
  }

  EvalOptions options;
  options.ks = c.eval_ks;
  options.strict = c.strict;
  std::vector<EvalRow> rows;
  std::string skipped_note;
  for (const Retriever *r : systems) {
    EvalResult result = EvaluateRetriever(*r, d.split.heldout, d.catalog, options);
    if (!result.skipped.empty() && skipped_note.empty()) {
      skipped_note = "skipped " + std::to_string(result.skipped.size()) +
                     " mentions with unknown gold\n";
    }
    rows.push_back(std::move(result.row));
  }
  WriteReports(rows, c.outdir);
  for (const char *name : {"report.txt", "report.csv", "report.json"}) run.Output(name);
  return FormatReportText(rows) + skipped_note;
}

std::string Query(Run &run) {
  const RunConfig &c = run.config();
  if (c.span.empty()) UsageError("query needs a span");
  if (c.k == 0) UsageError("query needs k >= 1");
  NgramVocabulary vocab = LoadVocabFor(run);
  Params<float> params = LoadModelFor(run, vocab);
  std::optional<EntityCatalog> catalog;
  if (auto path = run.OptionalInput(c.kb, "kb.jsonl", "kb")) catalog = LoadEntities(*path);
  RetrievalIndex index;
  if (auto path = run.OptionalInput(c.index, "index.bin", "index")) {
    index = LoadIndex(*path);
  } else {
    if (!catalog) UsageError("query needs an index or a kb (set 'index' or 'kb')");
    IndexParams brute;
    brute.kind = "brute";
    index = BuildIndex(CatalogEncodings(*catalog, vocab, params), CatalogIds(*catalog), brute, 0);
  }
  MentionExample ex;
  ex.features = QueryFeatures(c.span, c.context);
  DenseRetriever retriever(params, vocab, index, DenseName(index));
  std::vector<ScoredId> hits = retriever.Retrieve(retriever.Prepare(ex), c.k);
  ordered_json results = ordered_json::array();
  for (const ScoredId &h : hits) {
    ordered_json r;
    r["id"] = h.id;
    r["score"] = h.score;
    if (catalog) {
      if (auto i = catalog->Find(h.id)) r["title"] = (*catalog)[*i].title;
    }
    results.push_back(std::move(r));
  }
  ordered_json out;
  out["span"] = c.span;
  out["index"] = index.kind();
  out["results"] = std::move(results);
  return out.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

Matrix<float> RandomUnitRows(size_t n, size_t d, Rng &rng) {
  Matrix<float> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<double> row(d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double norm = 0;
    do {
      norm = 0;
      for (double &x : row) {
        x = rng.Normal();
        norm += x * x;
      }
    } while (norm == 0);
    norm = std::sqrt(norm);
    for (size_t j = 0; j < d; ++j) m(i, static_cast<Eigen::Index>(j)) = static_cast<float>(row[j] / norm);
  }
  return m;
}

std::string Benchmark(Run &run) {
  const RunConfig &c = run.config();
  if (c.bench_vectors == 0 || c.bench_dim == 0 || c.bench_queries == 0 || c.bench_k == 0) {
    UsageError("benchmark needs positive bench_vectors, bench_dim, bench_queries and bench_k");
  }
  Rng rng(DeriveSeed(c.RequireSeed(), kBenchSalt));
  Matrix<float> base = RandomUnitRows(c.bench_vectors, c.bench_dim, rng);
  Matrix<float> queries = RandomUnitRows(c.bench_queries, c.bench_dim, rng);
  std::vector<std::string> ids(c.bench_vectors);
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);

  const uint64_t index_seed = DeriveSeed(c.RequireSeed(), kIndexSalt);
  std::vector<BenchmarkRow> rows;
  std::vector<std::vector<uint32_t>> exact;
  ordered_json configs = ordered_json::array();
  for (const char *kind : {"brute", "ah", "tree"}) {
    IndexParams p = c.index_params;
    p.kind = kind;
    RetrievalIndex index = BuildIndex(base, ids, p, index_seed);
    if (exact.empty()) exact = ExactNeighbors(index.store(), queries, c.bench_k);
    rows.push_back(BenchmarkIndex(index, queries, c.bench_k, exact, c.bench_warmup, c.bench_repeats,
                                  kind));
    configs.push_back({{"method", kind},
                       {"subspaces", index.params.subspaces},
                       {"centers", index.params.centers},
                       {"partitions", index.params.partitions},
                       {"probes", index.params.probes},
                       {"reorder", index.params.reorder}});
  }
  const std::string csv = FormatBenchmarkCsv(rows);
  WriteTextFile(run.Output("benchmark.csv"), csv);
  WriteTextFile(run.Output("benchmark_config.json"), configs.dump(2) + "\n");
  return csv;
}

std::string GradCheck(Run &run) {
  const RunConfig &c = run.config();
  GradCheckResult r = RunGradientCheck(c.dims, c.batch, c.samples, c.RequireSeed());
  ordered_json j;
  j["max_relative_error"] = r.max_relative_error;
  j["coordinates"] = r.coordinates;
  j["families"] = r.families;
  j["worst_family"] = r.worst_family;
  const bool passed = std::isfinite(r.max_relative_error) && r.max_relative_error < 1e-4;
  j["passed"] = passed;
  WriteTextFile(run.Output("gradcheck.json"), j.dump(2) + "\n");
  if (!passed) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "gradient check failed: max relative error %.3e in %s",
                  r.max_relative_error, r.worst_family.c_str());
    NumericError(buf);
  }
  return j.dump(2) + "\n";
}

using CommandFn = std::string (*)(Run &);

const std::vector<std::pair<std::string, CommandFn>> &CommandTable() {
  static const std::vector<std::pair<std::string, CommandFn>> table = {
      {"ingest", Ingest},     {"synth", Synth},         {"train", Train},
      {"mine", Mine},         {"build-index", BuildIndexCommand},
      {"evaluate", Evaluate}, {"query", Query},         {"benchmark", Benchmark},
      {"gradcheck", GradCheck},
  };
  return table;
}

}  // namespace

void RunConfig::Set(const std::string &key, const std::string &value) {
  auto it = KeyTable().find(key);
  if (it == KeyTable().end()) UsageError("unknown config key: " + key);
  it->second.set(*this, value);
}

void RunConfig::Merge(std::string_view text) {
  for (const auto &[key, value] : ParseKeyValues(text)) Set(key, value);
}

void RunConfig::LoadFile(const std::string &path) {
  if (!fs::is_regular_file(path)) UsageError("missing config file " + path);
  std::vector<uint8_t> bytes = ReadFileBytes(path);
  Merge(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

std::map<std::string, std::string> RunConfig::Snapshot() const {
  std::map<std::string, std::string> out;
  for (const auto &[key, spec] : KeyTable()) out[key] = spec.get(*this);
  return out;
}

const std::vector<std::string> &RunConfig::Keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto &[key, spec] : KeyTable()) k.push_back(key);
    return k;
  }();
  return keys;
}

uint64_t RunConfig::RequireSeed() const {
  if (!seed) UsageError("a seed is required (set 'seed')");
  return *seed;
}

const std::vector<std::string> &CommandNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto &[name, fn] : CommandTable()) n.push_back(name);
    return n;
  }();
  return names;
}

std::string RunCommand(const std::string &command, const RunConfig &config) {
  CommandFn fn = nullptr;
  for (const auto &[name, f] : CommandTable()) {
    if (name == command) fn = f;
  }
  if (fn == nullptr) UsageError("unknown command: " + command);
  config.RequireSeed();
  Run run(command, config);
  try {
    std::string out = fn(run);
    run.WriteManifest("ok", "");
    return out;
  } catch (const std::exception &e) {
    try {
      run.WriteManifest("error", e.what());
    } catch (const std::exception &) {
    }
    throw;
  }
}

MentionFeatures QueryFeatures(std::string_view span, std::string_view context) {
  TokenList span_tokens = Tokenize(span);
  if (span_tokens.empty()) UsageError("query span has no tokens");
  TokenList tokens = Tokenize(context);
  auto at = std::search(tokens.begin(), tokens.end(), span_tokens.begin(), span_tokens.end());
  size_t start = static_cast<size_t>(at - tokens.begin());
  if (at == tokens.end()) {
    start = tokens.size();
    tokens.insert(tokens.end(), span_tokens.begin(), span_tokens.end());
  }
  AnnotatedDocument doc;
  doc.doc_id = "query";
  doc.tokens = std::move(tokens);
  doc.sentences.push_back({0, static_cast<uint32_t>(doc.tokens.size())});
  Anchor anchor{static_cast<uint32_t>(start), static_cast<uint32_t>(start + span_tokens.size()), ""};
  return BuildMentionFeatures(doc, anchor);
}

}  // namespace entret
