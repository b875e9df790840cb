// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// privagg <experiment> [--config FILE] [--output FILE] [--<option> VALUE]...
//
// Options given on the command line override the config file, which
// overrides the defaults. The CSV goes to --output or stdout.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "privagg/experiment.h"

namespace {

struct Invocation {
  std::string config_path;
  std::string output_path;
  std::string trace_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
};

bool ReadFile(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  *out = buffer.str();
  return true;
}

int Run(const std::string& name, Invocation& inv) {
  privagg::ConfigMap config;
  if (!inv.config_path.empty()) {
    std::string text;
    if (!ReadFile(inv.config_path, &text)) {
      std::cerr << "error: cannot read config " << inv.config_path << "\n";
      return 2;
    }
    auto parsed = privagg::ParseConfig(text);
    if (!parsed.ok()) {
      std::cerr << "error: " << inv.config_path << ": "
                << parsed.status().message() << "\n";
      return 2;
    }
    config = *std::move(parsed);
  }
  for (const auto& [key, option] : inv.options) {
    if (option->count() == 0) continue;
    auto flag = inv.flags.find(key);
    config[key] = flag != inv.flags.end() ? (flag->second ? "true" : "false")
                                          : inv.values[key];
  }
  if (!inv.trace_path.empty()) config["trace"] = "true";

  auto table = privagg::RunExperiment(name, config);
  if (!table.ok()) {
    std::cerr << "error: " << table.status().message() << "\n";
    return privagg::ExitCodeFor(table.status());
  }
  const std::string csv = privagg::FormatCsv(*table);
  if (inv.output_path.empty() || inv.output_path == "-") {
    std::cout << csv;
  } else {
    std::ofstream out(inv.output_path, std::ios::binary);
    out << csv;
    if (!out) {
      std::cerr << "error: cannot write " << inv.output_path << "\n";
      return 1;
    }
  }
  if (!inv.trace_path.empty()) {
    std::ofstream out(inv.trace_path, std::ios::binary);
    out << table->trace;
    if (!out) {
      std::cerr << "error: cannot write " << inv.trace_path << "\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private aggregation experiments; writes CSV."};
  app.require_subcommand(1);
  std::map<std::string, std::unique_ptr<Invocation>> invocations;
  for (const std::string& name : privagg::ExperimentNames()) {
    auto inv = std::make_unique<Invocation>();
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", inv->config_path, "key = value config file");
    sub->add_option("--output,-o", inv->output_path, "CSV path (default stdout)");
    if (name == "paalec-run") {
      sub->add_option("--trace-out", inv->trace_path,
                      "write the round transcript here");
    }
    const auto specs = privagg::ExperimentOptions(name);
    for (const privagg::OptionSpec& spec : *specs) {
      const std::string flag = "--" + spec.name;
      if (spec.is_flag) {
        inv->options[spec.name] =
            sub->add_flag(flag, inv->flags[spec.name], spec.help);
      } else {
        const std::string help =
            spec.default_value.empty()
                ? spec.help
                : spec.help + " [default " + spec.default_value + "]";
        inv->options[spec.name] =
            sub->add_option(flag, inv->values[spec.name], help);
      }
    }
    invocations[name] = std::move(inv);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  for (auto& [name, inv] : invocations) {
    if (app.got_subcommand(name)) return Run(name, *inv);
  }
  return 2;
}
