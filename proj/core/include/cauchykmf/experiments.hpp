#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cauchykmf/kmf.hpp"

namespace kmf {

enum class ExperimentId {
  SquareLinear,
  AnnulusLinear,
  SquareInconsistent,
  AnnulusSemilinear,
  SpectralDecay,
  RegularizationTradeoff,
  HadamardDemo,
  OperatorAudit,
};

ExperimentId parse_experiment_id(const std::string& name);
std::string to_string(ExperimentId id);
std::vector<std::string> experiment_names();

struct ExperimentConfig {
  ExperimentId id = ExperimentId::SquareLinear;
  std::array<int, 2> resolution{0, 0};  // cells: {nx, ny} or {nr, ntheta}
  double tol = 1e-3;
  int max_iter = 300;
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string out_dir;
  bool dump_mesh = false;
  double inconsistent_center = 0.5;  // pi/2 reproduces the literal datum
  int modes = 64;
  int n_max = 200;
};

ExperimentConfig default_config(ExperimentId id);

// Parses a JSON config object; -1 resolution entries keep defaults. Unknown
// keys are rejected. Throws ConfigError.
ExperimentConfig parse_config_json(const std::string& json_text);

struct ExperimentReport {
  ExperimentConfig config;
  int iterations = 0;
  bool converged = false;
  double error_l2_rel = 0.0;
  double error_linf = 0.0;
  double error_linf_rel = 0.0;
  std::string exact_solution;  // identifier of the reference solution
  std::map<std::string, double> metrics;
  std::vector<std::string> files;  // emitted files, relative to out_dir
  double wall_time_sec = 0.0;
  int exit_code = 0;  // 0 completed/converged, 2 not converged
};

// Runs one experiment, writing CSV/JSON outputs under config.out_dir.
// Infeasible configurations throw ConfigError before any compute.
ExperimentReport run_experiment(const ExperimentConfig& config);

// The two data-arc variants of the semilinear annulus experiment, exposed
// separately so they can be compared.
ExperimentReport run_semilinear_variant(const ExperimentConfig& config,
                                        bool large_data_arc);

struct ReconstructionDiff {
  int iterations_a = 0;
  int iterations_b = 0;
  double error_a = 0.0;
  double error_b = 0.0;
  int iteration_delta = 0;   // a - b
  double error_delta = 0.0;  // a - b
  bool first_dominates = false;  // a converged in fewer iterations with smaller error
};

// Requires both reports to reference the same exact solution.
ReconstructionDiff compare_reconstructions(const ExperimentReport& a,
                                           const ExperimentReport& b);

std::string report_to_json(const ExperimentReport& report);

}  // namespace kmf
