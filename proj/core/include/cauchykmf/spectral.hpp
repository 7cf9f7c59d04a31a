#pragma once

#include <Eigen/Dense>

#include <optional>

namespace kmf {

// Sine-basis coefficients of a trace function; entry i holds mode j = i + 1.
using ModeVector = Eigen::VectorXd;

enum class ModelDomain { Square, Annulus, Custom };

// Diagonal model of the step operator: per mode j the linear part acts with
// eigenvalue mu_j = lambda_j^2. The lambdas cluster at 1 so fast that they
// saturate to 1.0 in double precision from small j on; `gaps` stores 1 -
// lambda_j to full precision and all threshold logic runs on the gaps.
struct SpectralModel {
  ModelDomain domain = ModelDomain::Custom;
  double r0 = 0.0;  // inner radius, annulus only
  Eigen::VectorXd lambdas;
  Eigen::VectorXd gaps;  // 1 - lambda_j, computed without cancellation

  int modes() const { return static_cast<int>(lambdas.size()); }
  double mu(int j) const { return lambdas[j - 1] * lambdas[j - 1]; }      // 1-based
  double mu_gap(int j) const { return gaps[j - 1] * (1.0 + lambdas[j - 1]); }
};

inline constexpr int kDefaultModes = 64;

// lambda_j = sinh(2 j pi) / cosh(2 j pi) = tanh(2 j pi), evaluated through
// exponentials of negative arguments only.
double square_eigenvalue(int j);
double square_eigenvalue_gap(int j);  // 1 - lambda_j, full precision

// lambda_j = [(r0^-(j+1) - r0^(j-1)) (r0^-j - r0^j)] /
//            [(r0^-(j+1) + r0^(j-1)) (r0^-j + r0^j)], requires 0 < r0 < 1.
// Evaluated in the factored form ((1 - r0^(2j)) / (1 + r0^(2j)))^2.
double annulus_eigenvalue(int j, double r0);
double annulus_eigenvalue_gap(int j, double r0);

SpectralModel make_square_model(int j_max = kDefaultModes);
SpectralModel make_annulus_model(double r0, int j_max = kDefaultModes);
// Bridge from a discrete operator audit: treats the supplied T_l eigenvalues
// mu as lambda^2 and sorts them ascending.
SpectralModel model_from_eigenvalues(const Eigen::VectorXd& tl_eigenvalues);

// k steps of the affine iteration in the diagonal model:
// phi_j(k) = mu_j^k phi0_j + (1 - mu_j^k) / (1 - mu_j) * z_j.
ModeVector spectral_iterate(const SpectralModel& model, const ModeVector& phi0,
                            const ModeVector& z, long long k);

// mu_j^k evaluated through log1p/expm1 so that near-1 eigenvalues keep their
// precise decay.
double mode_power(const SpectralModel& model, int j, long long k);

// Error decay bound: sum_j j^-1 lambda_j^(2k) eps0_j^2. With weights c_j
// (positive, nondecreasing) and cutoff J it switches to the two-term bound
// lambda_J^(2k) (c_J/c_1)^2 |eps0|^2 + M / c_J^2 with
// M = sum_j j^-1 c_j^2 eps0_j^2.
double error_bound(const SpectralModel& model, const ModeVector& eps0, long long k,
                   const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                   std::optional<int> cutoff = std::nullopt);

// Periodic Sobolev norm (sum_j (1 + j^2)^s c_j^2)^(1/2).
double sobolev_norm(const ModeVector& v, double s);

// Hadamard's instability family: u_k(x,y) = (pi k)^-2 sinh(pi k y) sin(pi k x)
// with datum phi_k(x) = (pi k)^-1 sin(pi k x).
double hadamard_solution(int k, double x, double y);
double hadamard_datum(int k, double x);

// Recomputation of the quoted first-eigenvalue power on the square model:
// lambda_1^(2k) evaluated directly, together with the quoted value 0.061.
struct EigenvaluePowerClaim {
  double lambda1 = 0.0;
  long long k = 0;
  double computed_power = 0.0;  // lambda_1^(2k)
  double quoted_power = 0.0;
  double discrepancy = 0.0;
};
EigenvaluePowerClaim recompute_power_claim(long long k = 100000);

}  // namespace kmf
