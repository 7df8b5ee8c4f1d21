#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cape {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst observed deviation; meaning noted per check
  double tolerance = 0.0;  // 0 marks an exactness requirement
  std::string note;
};

struct CheckOptions {
  std::string filter;     // substring of check names; empty runs everything
  bool sabotage = false;  // negative control: flips one sign inside a check
  std::uint64_t seed = 42;
};

/// Runs the library's invariant suite (embedding identities, augmentation
/// oracle equivalence, planner and shuffle properties, attention
/// equivariance, file round-trips). Never throws on failures; each failure
/// is a CheckResult with passed == false.
std::vector<CheckResult> run_checks(const CheckOptions& opt = {});

bool all_passed(const std::vector<CheckResult>& results);

/// One line per check: [PASS]/[FAIL], name, measured value vs tolerance.
std::string format_check_report(const std::vector<CheckResult>& results);

}  // namespace cape
