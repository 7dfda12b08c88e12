#pragma once

#include <iosfwd>

#include "vcd/error.hpp"

namespace vcd {

/// 0 success, 2 usage, 3 I/O, 4 numerical or optical configuration.
int exit_code_for(ErrorKind kind) noexcept;

/// Entry point of the `vcd` tool. Reports go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vcd
