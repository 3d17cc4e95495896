#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simcurate::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kContractError = 1;
inline constexpr int kIoError = 2;
inline constexpr int kUsageError = 64;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace simcurate::cli
