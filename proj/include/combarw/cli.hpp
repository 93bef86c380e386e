#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace combarw::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

/// Runs one subcommand. `args` excludes the program name.
/// Exit codes: 0 success, 1 validation or usage error, 2 internal guard.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Git blob hash (SHA-1 of "blob <size>\0" + text), hex encoded.
std::string content_hash(const std::string& text);

}  // namespace combarw::cli
