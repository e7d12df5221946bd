#ifndef LOWSYNC_TOOLS_COMMANDS_HPP
#define LOWSYNC_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace lowsync::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// Environment variable naming the default directory for output files.
inline constexpr const char* kOutDirEnv = "LOWSYNC_OUT_DIR";

/// Parses `args` (without the program name) and runs the subcommand.
/// Tables go to `out` unless a file destination applies; diagnostics and
/// usage text go to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lowsync::cli

#endif
