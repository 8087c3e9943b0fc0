// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fgdm::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int run(int argc, const char* const* argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fgdm::cli
