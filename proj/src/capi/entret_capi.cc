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

#include "entret/entret.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "entret/eval.h"
#include "entret/pipeline.h"

struct entret_config {
  entret::RunConfig config;
};

struct entret_engine {
  entret::NgramVocabulary vocab{1};
  entret::Params<float> params;
  entret::RetrievalIndex index;
};

namespace {

thread_local std::string last_error;

entret_status Fail(entret_status status, const char *message) {
  last_error = message;
  return status;
}

// Runs fn, mapping exceptions onto status codes.
template <typename Fn>
entret_status Guard(Fn &&fn) {
  try {
    fn();
    return ENTRET_OK;
  } catch (const entret::Error &e) {
    return Fail(static_cast<entret_status>(e.kind()), e.what());
  } catch (const std::bad_alloc &) {
    return Fail(ENTRET_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception &e) {
    return Fail(ENTRET_INTERNAL_ERROR, e.what());
  }
}

char *Dup(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string JoinLines(const std::vector<std::string> &items) {
  std::string out;
  for (const std::string &s : items) out += s + "\n";
  return out;
}

#define ENTRET_REQUIRE(cond, what) \
  if (!(cond)) return Fail(ENTRET_USAGE_ERROR, what)

}  // namespace

extern "C" {

const char *entret_version(void) { return entret::kVersion.data(); }

const char *entret_last_error(void) { return last_error.c_str(); }

void entret_string_free(char *s) { std::free(s); }

entret_status entret_config_create(entret_config **out) {
  ENTRET_REQUIRE(out != nullptr, "config_create: null output");
  return Guard([&] { *out = new entret_config(); });
}

void entret_config_free(entret_config *config) { delete config; }

entret_status entret_config_set(entret_config *config, const char *key, const char *value) {
  ENTRET_REQUIRE(config != nullptr && key != nullptr && value != nullptr, "config_set: null argument");
  return Guard([&] { config->config.Set(key, value); });
}

entret_status entret_config_load(entret_config *config, const char *path) {
  ENTRET_REQUIRE(config != nullptr && path != nullptr, "config_load: null argument");
  return Guard([&] { config->config.LoadFile(path); });
}

entret_status entret_config_get(const entret_config *config, const char *key, char **value) {
  ENTRET_REQUIRE(config != nullptr && key != nullptr && value != nullptr, "config_get: null argument");
  return Guard([&] {
    auto snapshot = config->config.Snapshot();
    auto it = snapshot.find(key);
    if (it == snapshot.end()) entret::UsageError(std::string("unknown config key: ") + key);
    *value = Dup(it->second);
  });
}

entret_status entret_config_keys(char **keys) {
  ENTRET_REQUIRE(keys != nullptr, "config_keys: null output");
  return Guard([&] { *keys = Dup(JoinLines(entret::RunConfig::Keys())); });
}

entret_status entret_commands(char **names) {
  ENTRET_REQUIRE(names != nullptr, "commands: null output");
  return Guard([&] { *names = Dup(JoinLines(entret::CommandNames())); });
}

entret_status entret_run(const entret_config *config, const char *command, char **output) {
  ENTRET_REQUIRE(config != nullptr && command != nullptr, "run: null argument");
  return Guard([&] {
    std::string text = entret::RunCommand(command, config->config);
    if (output != nullptr) *output = Dup(text);
  });
}

entret_status entret_gradcheck(uint32_t dims, uint32_t batch, uint32_t samples, uint64_t seed,
                               double *max_relative_error, size_t *coordinates) {
  ENTRET_REQUIRE(max_relative_error != nullptr, "gradcheck: null output");
  return Guard([&] {
    entret::GradCheckResult r = entret::RunGradientCheck(dims, batch, samples, seed);
    *max_relative_error = r.max_relative_error;
    if (coordinates != nullptr) *coordinates = r.coordinates;
  });
}

entret_status entret_engine_open(const char *vocab_path, const char *model_path,
                                 const char *index_path, entret_engine **out) {
  ENTRET_REQUIRE(vocab_path != nullptr && model_path != nullptr && index_path != nullptr &&
                     out != nullptr,
                 "engine_open: null argument");
  return Guard([&] {
    auto engine = std::make_unique<entret_engine>();
    engine->vocab = entret::NgramVocabulary::Load(vocab_path);
    engine->params = entret::LoadParams(model_path);
    engine->index = entret::LoadIndex(index_path);
    if (engine->params.dims.vocab_rows != engine->vocab.rows()) {
      entret::DataError("model and vocabulary disagree on the number of rows");
    }
    if (engine->index.store().dim() != engine->params.dims.encode_dim) {
      entret::DataError("index and model disagree on the encoding width");
    }
    *out = engine.release();
  });
}

void entret_engine_close(entret_engine *engine) { delete engine; }

entret_status entret_engine_size(const entret_engine *engine, size_t *entities) {
  ENTRET_REQUIRE(engine != nullptr && entities != nullptr, "engine_size: null argument");
  *entities = engine->index.store().size();
  return ENTRET_OK;
}

entret_status entret_engine_query(const entret_engine *engine, const char *span, const char *context,
                                  size_t k, char **ids, float *scores, size_t *found) {
  ENTRET_REQUIRE(engine != nullptr && span != nullptr && found != nullptr, "engine_query: null argument");
  ENTRET_REQUIRE(k >= 1, "engine_query: k must be >= 1");
  ENTRET_REQUIRE(ids != nullptr && scores != nullptr, "engine_query: null output");
  return Guard([&] {
    entret::MentionExample ex;
    ex.features = entret::QueryFeatures(span, context == nullptr ? "" : context);
    entret::DenseRetriever retriever(engine->params, engine->vocab, engine->index, "query");
    std::vector<entret::ScoredId> hits = retriever.Retrieve(retriever.Prepare(ex), k);
    std::vector<char *> copies;
    try {
      for (const entret::ScoredId &h : hits) copies.push_back(Dup(h.id));
    } catch (...) {
      for (char *c : copies) std::free(c);
      throw;
    }
    for (size_t i = 0; i < hits.size(); ++i) {
      ids[i] = copies[i];
      scores[i] = static_cast<float>(hits[i].score);
    }
    *found = hits.size();
  });
}

}  // extern "C"
