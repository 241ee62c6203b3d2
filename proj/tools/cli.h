// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace tnrf::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

// Entry point of the `tnrf` tool; output goes to the given streams.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace tnrf::cli
