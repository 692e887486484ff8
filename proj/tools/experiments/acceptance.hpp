#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fwmkv::tools {

/// One measured quantity against its pinned threshold.
struct CheckRow {
  int criterion = 0;
  std::string check;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "in[a,b]", "=="
  double threshold = 0.0;
  bool pass = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<CheckRow> rows;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  bool pass() const;
};

struct AcceptanceReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;
  bool pass() const;
  /// criterion,check,value,relation,threshold,status. No timings, so reruns are byte-identical.
  std::string csv() const;
};

inline constexpr std::uint64_t kDefaultAcceptanceSeed = 20240611;

/// Criterion ids of a suite: metrics, calculus, dynamics, value, all. Throws UsageError otherwise.
std::vector<int> suite_criteria(const std::string& suite);

/// Runs one pinned criterion (1-8). Progress lines go to log when given.
CriterionResult run_criterion(int id, std::uint64_t seed, std::ostream* log = nullptr);

AcceptanceReport run_acceptance(const std::string& suite, std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace fwmkv::tools
