#pragma once

#include <iosfwd>

namespace iib::cli {

/// Entry point behind the iibtool binary. Exit codes: 0 success,
/// 1 validation failure (including gradcheck exceedance), 2 I/O error,
/// 3 bad flags.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iib::cli
