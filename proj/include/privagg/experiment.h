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

// Experiment harness: named experiments over the library, configured by flat
// key/value maps and reported as CSV tables.
//
// Every experiment is a pure function of its configuration (including the
// seed). Trials draw from DeriveStream(seed, trial), run in parallel when
// `threads` > 1, and are reduced in trial order, so the output does not
// depend on the thread count.

#ifndef PRIVAGG_EXPERIMENT_H_
#define PRIVAGG_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace privagg {

inline constexpr int kCsvSchemaVersion = 1;

using ConfigMap = std::map<std::string, std::string>;

// Parses `key = value` lines. Blank lines and lines starting with '#' are
// skipped; underscores in keys are read as dashes. Duplicate keys and lines
// without '=' are errors.
absl::StatusOr<ConfigMap> ParseConfig(std::string_view text);

struct OptionSpec {
  std::string name;
  std::string default_value;
  std::string help;
  bool is_flag = false;  // boolean switch: "true" / "false"
};

const std::vector<std::string>& ExperimentNames();

// Options accepted by an experiment; NotFound for unknown names.
absl::StatusOr<std::vector<OptionSpec>> ExperimentOptions(
    std::string_view experiment);

struct ExperimentRow {
  std::string experiment_id;
  int64_t n = 0;
  int64_t kappa = 0;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> analytic_value;
  std::optional<double> simulated_mean;
  std::optional<double> simulated_stderr;
  int64_t trials = 1;
  uint64_t seed = 0;
  // One per ExperimentTable::extra_columns.
  std::vector<std::string> extras;
};

struct ExperimentTable {
  std::string experiment_id;
  std::vector<std::string> extra_columns;
  std::vector<ExperimentRow> rows;
  // Round transcript (paalec-run with trace enabled); not part of the CSV.
  std::string trace;
};

// "# schema_version=1,experiment=<id>", the header, one line per row.
// Unset optional cells are empty.
std::string FormatCsv(const ExperimentTable& table);

// Runs `experiment` with `config` (missing keys take their defaults).
// InvalidArgument for unknown experiments, unknown keys, malformed values
// and out-of-regime parameters; ResourceExhausted when a numeric routine
// does not converge.
absl::StatusOr<ExperimentTable> RunExperiment(std::string_view experiment,
                                              const ConfigMap& config);

// 0 for OK, 3 for ResourceExhausted, 2 for configuration errors
// (InvalidArgument, OutOfRange, NotFound, FailedPrecondition), 1 otherwise.
int ExitCodeFor(const absl::Status& status);

}  // namespace privagg

#endif  // PRIVAGG_EXPERIMENT_H_
