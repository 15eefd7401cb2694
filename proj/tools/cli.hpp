#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsum::cli {

/// Runs one gsum invocation. args excludes the program name. Returns 0 when
/// every verdict passes, 1 when one fails, 2 on usage or input errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The manifest `gsum suite` uses when none is given.
std::string default_suite_manifest();

}  // namespace gsum::cli
