#pragma once

#include <filesystem>
#include <iosfwd>

#include "freespectra/config.hpp"

namespace fsp {

struct RunContext {
  std::filesystem::path out_dir = ".";
  int threads = 1;
  std::ostream* log = nullptr;  // one-line summary; std::cout when null
  std::ostream* err = nullptr;  // error messages; std::cerr when null
};

// Exit status contract: 0 success or verdict pass, 1 verdict fail,
// 2 execution error (bad input, I/O, solver failure).
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

int run(const RunConfig& cfg, const RunContext& ctx = {});

}  // namespace fsp
