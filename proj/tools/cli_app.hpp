#pragma once

#include <iosfwd>

namespace gbmod::cli {

enum ExitCode : int { kComplete = 0, kFailure = 1, kUsage = 2, kPartial = 3 };

/// Runs the command line frontend with explicit output streams.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbmod::cli
