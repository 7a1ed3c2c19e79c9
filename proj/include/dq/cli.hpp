#pragma once

// Command-line entry points.  Subcommands: simulate, simulate-obstacle,
// make-init, adjoint, grad-check, optimize, quench, oracle-ode.  Exit codes:
// 0 success, 1 invalid input (config/hypothesis violations), 2 numerical
// failure, 64 usage error.

namespace dq {

int cli_dispatch(int argc, const char* const* argv);

} // namespace dq
