#pragma once

#include <iosfwd>

namespace kftam::cli {

/// Parses argv, runs one subcommand and maps failures to exit codes:
/// 0 success, 2 input error, 3 tracking lost, 4 numerical failure. The
/// resolved configuration and progress go to `log`.
int cli_main(int argc, const char* const* argv, std::ostream& log);

}  // namespace kftam::cli
