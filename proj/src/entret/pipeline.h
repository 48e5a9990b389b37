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

// Reproducible command pipelines driven by one key=value run config.
//
// Commands: ingest, synth, train, mine, build-index, evaluate, query,
// benchmark, gradcheck. Each reads its inputs from the configured paths
// (defaulting to files inside outdir), writes its artifacts and a
// run_manifest.json to outdir, and returns the text meant for stdout.

#ifndef ENTRET_PIPELINE_H_
#define ENTRET_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entret/baselines.h"
#include "entret/corpus.h"
#include "entret/dataset.h"
#include "entret/index.h"
#include "entret/mining.h"
#include "entret/training.h"

namespace entret {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunConfig {
  // Paths; empty inputs default to the matching file in outdir.
  std::string kb, docs, vocab, model, index;
  std::string outdir = "out";

  std::optional<uint64_t> seed;

  uint32_t embed_dim = 64;
  uint32_t encode_dim = 64;
  TrainConfig train;
  DatasetOptions data;

  uint32_t mine_rounds = 3;
  uint32_t mine_k = 10;
  uint64_t mine_max_steps = 0;  // 0: same as max_steps

  IndexParams index_params;

  Bm25Params bm25;
  AliasExtensionMode alias_mode = AliasExtensionMode::kPrecedence;
  std::vector<size_t> eval_ks = {1, 100};
  bool strict = true;

  SyntheticConfig synth;

  std::string span, context;
  uint32_t k = 10;

  uint64_t bench_vectors = 100000;
  uint32_t bench_dim = 64;
  uint32_t bench_queries = 200;
  uint32_t bench_k = 10;
  uint32_t bench_warmup = 1;
  uint32_t bench_repeats = 3;

  uint32_t dims = 8;
  uint32_t batch = 4;
  uint32_t samples = 400;

  // Throws a usage error for unknown keys or malformed values.
  void Set(const std::string &key, const std::string &value);
  // key=value lines, '#' comments.
  void Merge(std::string_view text);
  void LoadFile(const std::string &path);

  // Every key with its current value, sorted by key.
  std::map<std::string, std::string> Snapshot() const;
  static const std::vector<std::string> &Keys();

  uint64_t RequireSeed() const;
};

const std::vector<std::string> &CommandNames();

// Runs one command. Throws entret::Error on failure.
std::string RunCommand(const std::string &command, const RunConfig &config);

// Mention features for free text: the span is located inside the context
// (first occurrence) or appended to it when absent.
MentionFeatures QueryFeatures(std::string_view span, std::string_view context);

}  // namespace entret

#endif  // ENTRET_PIPELINE_H_
