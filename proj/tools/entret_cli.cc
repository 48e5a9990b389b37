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

// Command-line driver. Usage:
//
//   entret <command> [--config FILE] [--set key=value ...] [--seed N] ...
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure,
// 4 internal error.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "entret/entret.h"

namespace {

std::vector<std::string> Lines(char *text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  entret_string_free(text);
  return out;
}

int Report(entret_status status) {
  std::cerr << "entret: " << entret_last_error() << "\n";
  return static_cast<int>(status);
}

const char *Describe(const std::string &command) {
  if (command == "ingest") return "Validate a KB and documents, split and build the vocabulary";
  if (command == "synth") return "Generate a synthetic KB and annotated corpus";
  if (command == "train") return "Train the dual encoder with in-batch negatives";
  if (command == "mine") return "Run iterative hard-negative mining rounds";
  if (command == "build-index") return "Encode the catalog and build a search index";
  if (command == "evaluate") return "Recall@k of the model and the baselines on the held-out split";
  if (command == "query") return "Top-k entities for a span in context, as JSON";
  if (command == "benchmark") return "Latency and overlap of brute, AH and tree search";
  if (command == "gradcheck") return "Finite-difference gradient check on a random model";
  return "";
}

}  // namespace

int main(int argc, char **argv) {
  char *raw = nullptr;
  if (entret_status s = entret_commands(&raw); s != ENTRET_OK) return Report(s);
  const std::vector<std::string> commands = Lines(raw);

  CLI::App app{"Dense entity retrieval: training, mining, indexing and evaluation."};
  app.set_version_flag("--version", entret_version());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--set", sets, "Override one key (key=value); repeatable");

  // Shorthand flags, applied after --config and before --set.
  const std::vector<std::pair<std::string, std::string>> shorthands = {
      {"seed", "Global seed (required)"},
      {"outdir", "Output directory"},
      {"kb", "Entity file (JSON Lines)"},
      {"docs", "Document file (JSON Lines)"},
      {"vocab", "Vocabulary file"},
      {"model", "Model file"},
      {"index", "Index file"},
      {"span", "Query span"},
      {"context", "Query context"},
      {"k", "Number of results"},
      {"dims", "Gradient check width (E = D)"},
      {"batch", "Gradient check batch size"},
      {"samples", "Gradient check coordinates"},
  };
  std::vector<std::string> values(shorthands.size());
  std::vector<CLI::Option *> options;
  for (size_t i = 0; i < shorthands.size(); ++i) {
    options.push_back(app.add_option("--" + shorthands[i].first, values[i], shorthands[i].second));
  }

  for (const std::string &c : commands) app.add_subcommand(c, Describe(c));

  if (argc > 1 && argv[1][0] != '-' &&
      std::find(commands.begin(), commands.end(), argv[1]) == commands.end()) {
    std::cerr << "entret: unknown command '" << argv[1] << "'\n\n" << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "entret: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  entret_config *config = nullptr;
  if (entret_status s = entret_config_create(&config); s != ENTRET_OK) return Report(s);
  auto fail = [&](entret_status s) {
    int code = Report(s);
    entret_config_free(config);
    return code;
  };
  if (!config_path.empty()) {
    if (entret_status s = entret_config_load(config, config_path.c_str()); s != ENTRET_OK) {
      return fail(s);
    }
  }
  for (size_t i = 0; i < shorthands.size(); ++i) {
    if (options[i]->count() == 0) continue;
    entret_status s = entret_config_set(config, shorthands[i].first.c_str(), values[i].c_str());
    if (s != ENTRET_OK) return fail(s);
  }
  for (const std::string &kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "entret: --set expects key=value, got '" << kv << "'\n";
      entret_config_free(config);
      return 1;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (entret_status s = entret_config_set(config, key.c_str(), value.c_str()); s != ENTRET_OK) {
      return fail(s);
    }
  }

  const std::string command = app.get_subcommands().front()->get_name();
  char *output = nullptr;
  entret_status s = entret_run(config, command.c_str(), &output);
  if (s != ENTRET_OK) return fail(s);
  std::fputs(output, stdout);
  entret_string_free(output);
  entret_config_free(config);
  return 0;
}
