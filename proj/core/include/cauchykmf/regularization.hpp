#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "cauchykmf/spectral.hpp"

namespace kmf {

enum class RegularizationStrategy { Cutoff, Power };

// Source-condition function with G : [0,1) -> R+ continuous, monotone
// increasing and G(lambda) -> inf as lambda -> 1. Default (1-lambda)^-p.
std::function<double(double)> power_source_condition(double p = 1.0);

struct RegularizationConfig {
  RegularizationStrategy strategy = RegularizationStrategy::Cutoff;
  int n = 2;
  std::function<double(double)> source_condition = power_source_condition(1.0);
  double M = 1.0;
  double epsilon = 0.0;
};

// Checks n >= 2, epsilon >= 0, and the G conditions by sampling.
void validate(const RegularizationConfig& config);

// mu(n) = n^(1/(1-n)), evaluated as exp(ln n / (1 - n)).
double mu_n(int n);

// Noisy samples of the Dirichlet datum plus the Neumann datum's coefficients.
struct NoisyData {
  std::vector<double> x;       // sample abscissae in [0, pi]
  std::vector<double> values;  // f_eps at the abscissae
  double epsilon = 0.0;
  Eigen::VectorXd g_coefficients;
};

// Smoothing by sine-series projection truncated at N(eps) = ceil(eps^(-1/r)),
// for data of assumed regularity r smoothed into order s < r. The cutoff is
// additionally capped at the sample Nyquist limit.
ModeVector smooth_data(const NoisyData& samples, double r, double s);

// Applies the regularized operator per mode with mu_j = lambda_j^2:
// cutoff keeps mu_j below the 1 - 1/n threshold and zeroes the rest;
// power damps with mu_j - mu_j^n.
ModeVector apply_regularized(const SpectralModel& model,
                             const RegularizationConfig& config,
                             const ModeVector& phi);

// Per-mode factor of the regularized operator.
double regularized_factor(const SpectralModel& model,
                          const RegularizationConfig& config, int j);

// Fixed point of phi = T_reg phi + z, mode-wise z_j / (1 - factor_j); exists
// for every n because the regularized operator is contractive.
ModeVector regularized_fixed_point(const SpectralModel& model,
                                   const RegularizationConfig& config,
                                   const ModeVector& z_eps);

struct ErrorSplit {
  double approx_term = 0.0;  // |(I - T_reg)^-1 (T_reg - T_l) phi_bar|
  double noise_term = 0.0;   // eps * max_j (1 - factor_j)^-1
  double total_bound = 0.0;
  double Lambda = 0.0;   // largest mu_j below 1 - 1/n
  double Upsilon = 0.0;  // largest mu_j below mu(n)
};

ErrorSplit error_split(const SpectralModel& model, const RegularizationConfig& config,
                       const ModeVector& phi_bar, double epsilon);

// Strategy objective of the optimal-n balance:
// cutoff:  M / G(1 - 1/n) + eps / (1 - Lambda(n))
// power:   mu^n |phi_bar| / (1 + mu^n - mu) + M / G(mu(n))
//          + eps / (1 + Upsilon^n - Upsilon)
double regularization_objective(const SpectralModel& model,
                                RegularizationStrategy strategy,
                                const std::function<double(double)>& G,
                                double phi_bar_norm, double M, double epsilon, int n);

// Exhaustive scan over n in {2..n_max}; ties break toward smaller n.
int optimal_n(const SpectralModel& model, RegularizationStrategy strategy,
              const std::function<double(double)>& G, double phi_bar_norm,
              double M, double epsilon, int n_max);

}  // namespace kmf
