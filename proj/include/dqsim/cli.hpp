#pragma once

#include <iosfwd>

namespace dqsim {

/// Exit codes: 0 success, 1 validation error, 2 runtime or fit error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dqsim
