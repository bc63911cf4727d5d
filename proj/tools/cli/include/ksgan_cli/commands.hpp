#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ksgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Entry point of the ksgan tool. Subcommands: train, sample, eval,
/// demo-chi-gaussian, hist.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ksgan::cli
