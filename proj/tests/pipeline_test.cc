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

#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "test_util.h"

namespace entret {
namespace {

using nlohmann::json;
using testing::CaptureError;
using testing::Contains;
using testing::TempDir;

std::string ReadText(const std::string &path) {
  std::vector<uint8_t> b = ReadFileBytes(path);
  return std::string(b.begin(), b.end());
}

RunConfig SmallConfig(const TempDir &dir) {
  RunConfig c;
  c.Merge(
      "# tiny end-to-end run\n"
      "seed = 5\n"
      "synth_entities = 24\n"
      "synth_families = 6\n"
      "synth_mentions_per_entity = 6\n"
      "embed_dim = 12\n"
      "encode_dim = 12\n"
      "batch_size = 8\n"
      "max_steps = 60\n"
      "eval_every = 30\n"
      "mine_rounds = 1\n"
      "mine_max_steps = 20\n"
      "holdout = 0.2\n"
      "index_kind = ah\n"
      "subspaces = 3\n"
      "centers = 4\n");
  c.outdir = dir.path().string();
  return c;
}

TEST_CASE("config set, merge and snapshot") {
  RunConfig c;
  CHECK_FALSE(c.seed.has_value());
  c.Set("seed", "17");
  c.Set("learning_rate", "0.25");
  c.Set("strict", "false");
  c.Set("eval_ks", "1,10,100");
  c.Set("alias_mode", "merged");
  CHECK(c.RequireSeed() == 17);
  CHECK(c.train.learning_rate == 0.25);
  CHECK_FALSE(c.strict);
  CHECK(c.eval_ks == std::vector<size_t>{1, 10, 100});
  CHECK(c.alias_mode == AliasExtensionMode::kMerged);

  auto snap = c.Snapshot();
  CHECK(snap.size() == RunConfig::Keys().size());
  CHECK(snap["seed"] == "17");
  CHECK(snap["strict"] == "false");
  CHECK(snap["eval_ks"] == "1,10,100");
  CHECK(snap["alias_mode"] == "merged");

  RunConfig d;
  for (const auto &[k, v] : snap) d.Set(k, v);
  CHECK(d.Snapshot() == snap);
}

TEST_CASE("config errors are usage errors") {
  RunConfig c;
  Error e = CaptureError([&] { c.Set("no_such_key", "1"); });
  CHECK(e.kind() == ErrorKind::kUsage);
  CHECK(Contains(e.what(), "no_such_key"));
  CHECK(CaptureError([&] { c.Set("max_steps", "many"); }).kind() == ErrorKind::kUsage);
  CHECK(CaptureError([&] { c.Set("strict", "maybe"); }).kind() == ErrorKind::kUsage);
  CHECK(CaptureError([&] { c.Merge("seed\n"); }).kind() == ErrorKind::kUsage);
  CHECK(CaptureError([&] { c.RequireSeed(); }).kind() == ErrorKind::kUsage);
  CHECK(CaptureError([&] { c.LoadFile("/nonexistent/run.cfg"); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("config file") {
  TempDir dir;
  WriteTextFile(dir.File("run.cfg"), "seed=3\n# comment\nk = 7\n");
  RunConfig c;
  c.LoadFile(dir.File("run.cfg"));
  CHECK(c.RequireSeed() == 3);
  CHECK(c.k == 7);
}

TEST_CASE("commands") {
  CHECK(CommandNames() == std::vector<std::string>{"ingest", "synth", "train", "mine",
                                                   "build-index", "evaluate", "query",
                                                   "benchmark", "gradcheck"});
  RunConfig c;
  c.seed = 1;
  CHECK(CaptureError([&] { RunCommand("bogus", c); }).kind() == ErrorKind::kUsage);
  RunConfig unseeded;
  CHECK(CaptureError([&] { RunCommand("synth", unseeded); }).kind() == ErrorKind::kUsage);
}

TEST_CASE("missing input is a usage error with an error manifest") {
  TempDir dir;
  RunConfig c;
  c.seed = 1;
  c.outdir = dir.path().string();
  Error e = CaptureError([&] { RunCommand("train", c); });
  CHECK(e.kind() == ErrorKind::kUsage);
  CHECK(Contains(e.what(), "missing input"));
  json m = json::parse(ReadText(dir.File("run_manifest.json")));
  CHECK(m["status"] == "error");
  CHECK(m["command"] == "train");
}

TEST_CASE("end-to-end pipeline") {
  TempDir dir;
  RunConfig c = SmallConfig(dir);

  json synth = json::parse(RunCommand("synth", c));
  CHECK(synth["entities"] == 24);
  CHECK(synth["mentions"] == 24 * 6);
  json m = json::parse(ReadText(dir.File("run_manifest.json")));
  CHECK(m["command"] == "synth");
  CHECK(m["status"] == "ok");
  CHECK(m["version"] == std::string(kVersion));
  CHECK(m["seed"] == 5);
  CHECK(m["config"]["synth_entities"] == "24");
  CHECK(m["outputs"].size() == 2);

  RunCommand("ingest", c);
  CHECK(std::filesystem::exists(dir.File("vocab.bin")));
  RunCommand("train", c);
  for (const char *f : {"model.bin", "train_log.csv", "train_summary.json"}) {
    CHECK(std::filesystem::exists(dir.File(f)));
  }
  m = json::parse(ReadText(dir.File("run_manifest.json")));
  CHECK(m["inputs"].size() == 2);

  RunCommand("mine", c);
  CHECK(Contains(ReadText(dir.File("mining.csv")), "\n"));
  json build = json::parse(RunCommand("build-index", c));
  CHECK(build["kind"] == "ah");
  CHECK(build["entities"] == 24);

  std::string report = RunCommand("evaluate", c);
  for (const char *name : {"DEER", "DEER-AH", "AT-Prior", "BM25"}) CHECK(Contains(report, name));
  json rj = json::parse(ReadText(dir.File("report.json")));
  CHECK(rj.is_array());

  c.span = "entity";
  c.context = "a sentence about an entity";
  c.k = 3;
  json q = json::parse(RunCommand("query", c));
  CHECK(q["results"].size() == 3);
  CHECK(q["index"] == "ah");
  for (const json &r : q["results"]) CHECK(r.contains("title"));
}

TEST_CASE("gradcheck command") {
  TempDir dir;
  RunConfig c;
  c.seed = 2;
  c.outdir = dir.path().string();
  c.samples = 100;
  json j = json::parse(RunCommand("gradcheck", c));
  CHECK(j["max_relative_error"].get<double>() < 1e-4);
  CHECK(std::filesystem::exists(dir.File("gradcheck.json")));
}

TEST_CASE("query features") {
  MentionFeatures inside = QueryFeatures("Paris", "we flew to paris last spring");
  CHECK(inside.span.tokens == TokenList{"paris"});
  CHECK(inside.left_context.tokens.back() == "to");
  CHECK(inside.right_context.tokens.front() == "last");
  MentionFeatures appended = QueryFeatures("paris", "we flew somewhere");
  CHECK(appended.left_context.tokens.back() == "somewhere");
  CHECK(appended == QueryFeatures("paris", "we flew somewhere paris"));
  CHECK(CaptureError([] { QueryFeatures("  ", "context"); }).kind() == ErrorKind::kUsage);
}

}  // namespace
}  // namespace entret
