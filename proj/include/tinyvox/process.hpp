// Copyright 2026 The tinyvox Authors.
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

#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace tinyvox {

struct ProcessResult {
  bool timed_out = false;
  int exit_code = -1;    ///< valid when the process exited normally
  int term_signal = 0;   ///< non-zero when killed by a signal
};

/// Runs `/bin/sh -c '<command> "$@"'` with args as the positional
/// parameters, so paths need no quoting. stdout and stderr go to log_path.
/// A zero timeout waits forever; on expiry the whole process group is
/// killed.
ProcessResult run_shell_command(const std::string& command, const std::vector<std::string>& args,
                                std::chrono::milliseconds timeout, const std::string& log_path);

}  // namespace tinyvox
