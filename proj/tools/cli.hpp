// Copyright 2026 The hyperscope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hyperscope::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kValidation = 2,
  kRuntime = 3,
};

/// Runs the command line with `args` excluding the program name. Reports go
/// to `--out` or to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyperscope::cli
