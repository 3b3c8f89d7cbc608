#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace curverl::cli {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string relation = "<";
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// theorem1, corollary1, prop1, prop2, prop4, aggressiveness.
const std::vector<std::string>& verify_suite_names();

/// Throws std::invalid_argument for an unknown suite.
SuiteReport run_verify_suite(const std::string& suite);

void print_report(std::ostream& out, const SuiteReport& report);

}  // namespace curverl::cli
