#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fwmkv/fwmkv.hpp"

namespace fwmkv::tools {

inline constexpr const char* kToolVersion = "0.1.0";

/// Bad arguments, unreadable input, unwritable output: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Whitespace-separated `term=coef` with term one of const, cosK, sinK (d = 1) or cos(k1,..,kd), sin(..).
std::vector<TrigTerm> parse_trig_terms(const std::string& text, int dim);

/// `dirac:x[,y,z]`, `uniform[:cells]`, or a path to a measure file.
TorusMeasure load_measure_spec(const std::string& spec, int dim);

struct FamilySpec {
  std::string name = "eikonal";  // eikonal, kuramoto, fourier
  double sigma = 1.0;
  std::string L = "const=1 cos1=1";  // eikonal running cost in the mean
  double kappa = 1.0;                // kuramoto coupling
  // fourier
  int dim = 1;
  double gain = 1.0;
  std::vector<std::string> drift;  // trig terms per axis, or empty
  double cost_control = 1.0;
  std::string cost;
  std::string moment;
  double moment_drift = 0.0;
  double moment_cost = 0.0;
  double terminal = 0.0;

  int state_dim() const { return name == "fourier" ? dim : 1; }
};
CoefficientFamily make_family(const FamilySpec& spec);
PeriodicFunction1D eikonal_running_cost(const std::string& L);

struct DictionarySpec {
  double lo = -2.0;
  double hi = 2.0;
  int count = 9;
  std::vector<double> values;  // overrides lo/hi/count when nonempty
  ControlDictionary build() const;
};

struct ExperimentConfig {
  std::string id = "run";
  FamilySpec family;
  DictionarySpec dictionary;
  SimulationConfig sim;  // sim.seed is the experiment seed
  std::string init = "dirac:0";
  int depth = 4;
  int mc_reps = 32;
  std::size_t budget = 2'000'000;
  double lambda = 0.0;  // 0 selects n_*(d)
  int cutoff = 32;
  std::filesystem::path output = "run";

  double metric_order() const { return lambda > 0.0 ? lambda : n_star(family.state_dim()); }
  SearchConfig search() const;

  /// Every field, so that from_kv(to_kv()) == *this.
  KvConfig to_kv() const;
  /// Missing keys keep their defaults; unknown sections or keys are errors.
  static ExperimentConfig from_kv(const KvConfig& kv);
  static ExperimentConfig load(const std::filesystem::path& path);
  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return a.to_kv() == b.to_kv(); }
};

/// Shortest text that reads back to the same double.
std::string format_double(double x);

struct CheckOutcome {
  std::string name;
  bool pass = false;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string command;
  KvConfig config;  // resolved configuration echo
  double wall_clock = 0.0;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> artifacts;

  bool pass() const;
  void write(const std::filesystem::path& dir) const;
  /// Throws UsageError when dir has no manifest.
  static RunManifest read(const std::filesystem::path& dir);
  static RunManifest from_kv(const KvConfig& kv);
};
inline constexpr const char* kManifestName = "manifest.txt";

/// Exclusive ownership of a run directory through `.lock`; the directory is created if needed.
class RunLock {
 public:
  explicit RunLock(std::filesystem::path dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// w(t, y) triples, one per line, time-major; blank line between time slices.
void write_value_surface(std::ostream& out, const ValueTable& table);
/// Inverse of the table file written by the eikonal command.
void write_value_table(const std::filesystem::path& path, const ValueTable& table);
ValueTable read_value_table(const std::filesystem::path& path);

}  // namespace fwmkv::tools
