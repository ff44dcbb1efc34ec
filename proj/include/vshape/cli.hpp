#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vshape::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `vshape` tool. Returns the process exit code.
int run(int argc, const char* const* argv);
/// Same, with explicit arguments (without the program name) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vshape::cli
