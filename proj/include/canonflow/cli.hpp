#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace canonflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitDomainError = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the `canonflow` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace canonflow
