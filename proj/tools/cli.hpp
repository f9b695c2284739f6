#pragma once

#include <iosfwd>

namespace geodex::cli {

/// Entry point of the geodex tool.  Returns 0 on pass, 1 on a failed check or
/// computation, 2 on a usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geodex::cli
