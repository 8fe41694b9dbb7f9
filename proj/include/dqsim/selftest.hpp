#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dqsim {

struct SelfTestCheck {
  std::string name;
  double value = 0.0;      ///< measured error or statistic
  double tolerance = 0.0;  ///< pass when value <= tolerance
  bool passed = false;
};

/// Analytic/numeric cross-checks of the core library. Deterministic for a
/// given seed.
std::vector<SelfTestCheck> run_selftest(std::uint64_t seed);

}  // namespace dqsim
