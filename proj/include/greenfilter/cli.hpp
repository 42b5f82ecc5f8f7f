/*
 * Copyright 2026 The greenfilter Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "greenfilter/kernels.hpp"

namespace greenfilter {

const char* version() noexcept;

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitVerification = 3,
};

struct RunRequest {
  std::string command;  ///< validate|riccati|kernel|gram|filter|smooth|simulate|verify
  std::string model_path;
  std::string output_dir = ".";
  std::vector<double> probes;
  std::optional<std::size_t> n_paths;
  std::uint64_t seed = 0;
  KernelRoute route = KernelRoute::Riccati;
  std::string suite = "all";  ///< identities|rkhs|montecarlo|all
  std::string obs_path;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Runs one command, writes its artifacts and manifest.json into
/// request.output_dir, and returns the exit status. Diagnostics go to `diag`.
int run(const RunRequest& request, std::ostream& diag);

/// Parses argv into a RunRequest and calls run().
int cli_main(int argc, char** argv);

}  // namespace greenfilter
