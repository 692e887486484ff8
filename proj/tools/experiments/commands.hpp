#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "acceptance.hpp"
#include "experiments.hpp"

namespace fwmkv::tools {

/// Exit codes shared by every command.
enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitUsage = 2 };

struct MetricArgs {
  std::string first;
  std::string second;
  std::optional<double> lambda;  // n_*(d) when absent
  int cutoff = 64;
  int dim = 1;  // for dirac:/uniform specs
};
/// Prints `value,err,K`.
int cmd_metric(const MetricArgs& args, std::ostream& out);

struct HamiltonianArgs {
  ExperimentConfig config;
  std::string gamma;  // trig terms
  bool half = false;
  int refine = 0;
};
/// Prints `value,argmin,control`.
int cmd_hamiltonian(const HamiltonianArgs& args, std::ostream& out);

struct SimulateArgs {
  ExperimentConfig config;
  std::vector<double> signal{0.0};  // constants on equal pieces of [t0, T]
};
/// Writes the trajectory into the run directory and prints the payoff.
int cmd_simulate(const SimulateArgs& args, std::ostream& out);

struct EikonalArgs {
  ExperimentConfig config;  // family.L, sim.horizon, output
  int time_cells = 200;
  int space_cells = 200;
  bool oracle = false;  // compare against the trajectory oracle; gap > 2e-2 fails
};
/// Writes w_table.txt; prints `w(0,0),error_estimate,cfl`.
int cmd_eikonal(const EikonalArgs& args, std::ostream& out);

struct ValueArgs {
  ExperimentConfig config;
  double t = 0.0;
};
int cmd_value(const ValueArgs& args, std::ostream& out);

struct DppArgs {
  ExperimentConfig config;
  double t = 0.0;
  std::vector<double> taus{0.5};
};
/// Writes dpp.csv; exit 1 when a row fails its error bar.
int cmd_dpp_check(const DppArgs& args, std::ostream& out);

struct LipschitzArgs {
  ExperimentConfig config;
  std::string mode = "time";  // time or space
  double t = 0.0;
  std::vector<double> gaps{0.4, 0.2, 0.1, 0.05};
  int pairs = 10;  // space mode: random equal-weight clouds of config.sim.particles atoms
};
/// Writes lipschitz.csv; exit 1 when the probe fails.
int cmd_lipschitz(const LipschitzArgs& args, std::ostream& out);

struct AcceptanceArgs {
  std::string suite;
  std::uint64_t seed = kDefaultAcceptanceSeed;
  std::filesystem::path output = ".";
};
/// Writes acceptance_<suite>.csv and a manifest; prints one PASS/FAIL line per criterion.
int cmd_acceptance(const AcceptanceArgs& args, std::ostream& out);

/// Turns run artifacts into .dat files: w_surface.dat, lipschitz.dat, dpp.dat.
int cmd_export(const std::filesystem::path& dir, std::ostream& out);

/// The mkv front end. Parse errors and exceptions map to exit code 2.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fwmkv::tools
