#include "cauchykmf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kmf {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// r0^p by binary exponentiation; exact for the small integer powers used here.
double ipow(double base, int p) {
  double result = 1.0;
  double b = base;
  while (p > 0) {
    if (p & 1) result *= b;
    b *= b;
    p >>= 1;
  }
  return result;
}

void check_mode(int j) {
  if (j < 1) throw std::invalid_argument("mode index must be >= 1");
}

}  // namespace

double square_eigenvalue(int j) {
  check_mode(j);
  const double q = std::exp(-4.0 * j * kPi);
  return (1.0 - q) / (1.0 + q);
}

double square_eigenvalue_gap(int j) {
  check_mode(j);
  const double q = std::exp(-4.0 * j * kPi);
  return 2.0 * q / (1.0 + q);
}

double annulus_eigenvalue(int j, double r0) {
  check_mode(j);
  if (!(0.0 < r0 && r0 < 1.0))
    throw std::invalid_argument("annulus_eigenvalue: r0 must lie in (0,1)");
  const double q = ipow(r0, 2 * j);
  const double ratio = (1.0 - q) / (1.0 + q);
  return ratio * ratio;
}

double annulus_eigenvalue_gap(int j, double r0) {
  check_mode(j);
  if (!(0.0 < r0 && r0 < 1.0))
    throw std::invalid_argument("annulus_eigenvalue_gap: r0 must lie in (0,1)");
  const double q = ipow(r0, 2 * j);
  const double d = 1.0 + q;
  return 4.0 * q / (d * d);
}

namespace {

void check_model(SpectralModel& model) {
  const int n = model.modes();
  if (n < 1) throw std::invalid_argument("SpectralModel: needs at least one mode");
  for (int i = 0; i < n; ++i) {
    if (!(model.lambdas[i] > 0.0) || model.lambdas[i] > 1.0 || model.gaps[i] < 0.0)
      throw std::invalid_argument("SpectralModel: eigenvalues must lie in (0,1)");
    if (i > 0) {
      if (model.lambdas[i] < model.lambdas[i - 1] || model.gaps[i] > model.gaps[i - 1])
        throw std::invalid_argument("SpectralModel: eigenvalues must be monotone in j");
      // Strict while the gap is still representable; saturated tails may tie.
      if (model.gaps[i - 1] > 0.0 && model.gaps[i] >= model.gaps[i - 1])
        throw std::invalid_argument("SpectralModel: eigenvalue gaps must decrease");
    }
  }
}

}  // namespace

SpectralModel make_square_model(int j_max) {
  if (j_max < 1) throw std::invalid_argument("make_square_model: j_max must be >= 1");
  SpectralModel m;
  m.domain = ModelDomain::Square;
  m.lambdas.resize(j_max);
  m.gaps.resize(j_max);
  for (int j = 1; j <= j_max; ++j) {
    m.lambdas[j - 1] = square_eigenvalue(j);
    m.gaps[j - 1] = square_eigenvalue_gap(j);
  }
  check_model(m);
  return m;
}

SpectralModel make_annulus_model(double r0, int j_max) {
  if (j_max < 1) throw std::invalid_argument("make_annulus_model: j_max must be >= 1");
  SpectralModel m;
  m.domain = ModelDomain::Annulus;
  m.r0 = r0;
  m.lambdas.resize(j_max);
  m.gaps.resize(j_max);
  for (int j = 1; j <= j_max; ++j) {
    m.lambdas[j - 1] = annulus_eigenvalue(j, r0);
    m.gaps[j - 1] = annulus_eigenvalue_gap(j, r0);
  }
  check_model(m);
  return m;
}

SpectralModel model_from_eigenvalues(const Eigen::VectorXd& tl_eigenvalues) {
  if (tl_eigenvalues.size() < 1)
    throw std::invalid_argument("model_from_eigenvalues: empty spectrum");
  Eigen::VectorXd mu = tl_eigenvalues;
  std::sort(mu.data(), mu.data() + mu.size());
  SpectralModel m;
  m.domain = ModelDomain::Custom;
  m.lambdas.resize(mu.size());
  m.gaps.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0 && mu[i] < 1.0))
      throw std::invalid_argument(
          "model_from_eigenvalues: eigenvalues must lie in (0,1)");
    m.lambdas[i] = std::sqrt(mu[i]);
    m.gaps[i] = 1.0 - m.lambdas[i];
  }
  return m;
}

double mode_power(const SpectralModel& model, int j, long long k) {
  check_mode(j);
  if (k < 0) throw std::invalid_argument("mode_power: k must be >= 0");
  const double mg = model.mu_gap(j);
  if (mg <= 0.0) return 1.0;
  return std::exp(static_cast<double>(k) * std::log1p(-mg));
}

ModeVector spectral_iterate(const SpectralModel& model, const ModeVector& phi0,
                            const ModeVector& z, long long k) {
  const int n = model.modes();
  if (phi0.size() != n || z.size() != n)
    throw std::invalid_argument("spectral_iterate: vector length mismatch");
  if (k < 0) throw std::invalid_argument("spectral_iterate: k must be >= 0");

  ModeVector out(n);
  for (int j = 1; j <= n; ++j) {
    const double mg = model.mu_gap(j);
    const double mu_k = mode_power(model, j, k);
    double geom;  // (1 - mu^k) / (1 - mu)
    if (mg <= 0.0) {
      geom = static_cast<double>(k);
    } else {
      geom = -std::expm1(static_cast<double>(k) * std::log1p(-mg)) / mg;
    }
    out[j - 1] = mu_k * phi0[j - 1] + geom * z[j - 1];
  }
  return out;
}

double error_bound(const SpectralModel& model, const ModeVector& eps0, long long k,
                   const std::optional<Eigen::VectorXd>& weights,
                   std::optional<int> cutoff) {
  const int n = model.modes();
  if (eps0.size() != n) throw std::invalid_argument("error_bound: eps0 length mismatch");
  if (k < 0) throw std::invalid_argument("error_bound: k must be >= 0");

  // lambda_j^(2k) through the gap representation.
  auto lambda_pow_2k = [&model, k](int j) {
    const double g = model.gaps[j - 1];
    if (g <= 0.0) return 1.0;
    return std::exp(2.0 * static_cast<double>(k) * std::log1p(-g));
  };

  if (!weights) {
    double sum = 0.0;
    for (int j = 1; j <= n; ++j)
      sum += lambda_pow_2k(j) * eps0[j - 1] * eps0[j - 1] / j;
    return sum;
  }

  const Eigen::VectorXd& c = *weights;
  if (c.size() != n) throw std::invalid_argument("error_bound: weight length mismatch");
  for (int i = 0; i < n; ++i) {
    if (!(c[i] > 0.0)) throw std::invalid_argument("error_bound: weights must be positive");
    if (i > 0 && c[i] < c[i - 1])
      throw std::invalid_argument("error_bound: weights must be nondecreasing");
  }
  const int J = cutoff.value_or(n);
  if (J < 1 || J > n) throw std::invalid_argument("error_bound: cutoff out of range");

  double eps_norm2 = 0.0;  // |eps0|^2 in the j^-1-weighted convention
  double big_m = 0.0;      // sum j^-1 c_j^2 eps0_j^2
  for (int j = 1; j <= n; ++j) {
    eps_norm2 += eps0[j - 1] * eps0[j - 1] / j;
    big_m += c[j - 1] * c[j - 1] * eps0[j - 1] * eps0[j - 1] / j;
  }
  const double ratio = c[J - 1] / c[0];
  return lambda_pow_2k(J) * ratio * ratio * eps_norm2 + big_m / (c[J - 1] * c[J - 1]);
}

double sobolev_norm(const ModeVector& v, double s) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double j = static_cast<double>(i + 1);
    sum += std::pow(1.0 + j * j, s) * v[i] * v[i];
  }
  return std::sqrt(sum);
}

double hadamard_solution(int k, double x, double y) {
  if (k < 1) throw std::invalid_argument("hadamard_solution: k must be >= 1");
  const double pk = kPi * k;
  return std::sinh(pk * y) * std::sin(pk * x) / (pk * pk);
}

double hadamard_datum(int k, double x) {
  if (k < 1) throw std::invalid_argument("hadamard_datum: k must be >= 1");
  const double pk = kPi * k;
  return std::sin(pk * x) / pk;
}

EigenvaluePowerClaim recompute_power_claim(long long k) {
  EigenvaluePowerClaim claim;
  claim.lambda1 = square_eigenvalue(1);
  claim.k = k;
  const double gap = square_eigenvalue_gap(1);
  claim.computed_power = std::exp(2.0 * static_cast<double>(k) * std::log1p(-gap));
  claim.quoted_power = 0.061;
  claim.discrepancy = claim.computed_power - claim.quoted_power;
  return claim;
}

}  // namespace kmf
