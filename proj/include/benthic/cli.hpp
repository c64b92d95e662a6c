#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace benthic {

// Environment variable naming a JSON training-config file used as defaults.
inline constexpr const char *kConfigEnv = "BENTHIC_HC_CONFIG";

/// Runs the command line `args` (args[0] is the program name). Returns 0 on
/// success, 1 on a domain error, 2 on a usage error. Domain errors are
/// reported on `err` as a single `error[<Code>]: <message>` line.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace benthic
