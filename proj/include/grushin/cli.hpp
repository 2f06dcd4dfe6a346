#pragma once

#include <iosfwd>
#include <string>

namespace grushin::cli {

/// Exit codes: 0 all checks passed, 1 at least one check failed,
/// 2 input/config error. Never throws.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_override, int threads_override,
                std::ostream& log);

} // namespace grushin::cli
