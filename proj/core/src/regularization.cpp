#include "cauchykmf/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kmf {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// mu_j^n through the gap so that saturated eigenvalues keep a meaningful power.
double mu_pow(const SpectralModel& model, int j, int n) {
  const double mg = model.mu_gap(j);
  if (mg <= 0.0) return 1.0;
  return std::exp(static_cast<double>(n) * std::log1p(-mg));
}

// cutoff keeps mode j iff mu_j <= 1 - 1/n, i.e. mu_gap_j >= 1/n.
bool cutoff_keeps(const SpectralModel& model, int j, int n) {
  return model.mu_gap(j) >= 1.0 / n;
}

// 1 - factor_j without cancellation.
double one_minus_factor(const SpectralModel& model, const RegularizationConfig& config,
                        int j) {
  if (config.strategy == RegularizationStrategy::Cutoff)
    return cutoff_keeps(model, j, config.n) ? model.mu_gap(j) : 1.0;
  // power: 1 - mu + mu^n
  return model.mu_gap(j) + mu_pow(model, j, config.n);
}

}  // namespace

std::function<double(double)> power_source_condition(double p) {
  if (!(p > 0.0)) throw std::invalid_argument("power_source_condition: p must be > 0");
  return [p](double lambda) { return std::pow(1.0 - lambda, -p); };
}

void validate(const RegularizationConfig& config) {
  if (config.n < 2) throw std::invalid_argument("RegularizationConfig: n must be >= 2");
  if (config.epsilon < 0.0)
    throw std::invalid_argument("RegularizationConfig: epsilon must be >= 0");
  if (!config.source_condition)
    throw std::invalid_argument("RegularizationConfig: source condition G not set");

  const auto& G = config.source_condition;
  double prev = 0.0;
  for (int i = 0; i <= 19; ++i) {
    const double lambda = 0.05 * i;
    const double g = G(lambda);
    if (!(g > 0.0) || !std::isfinite(g))
      throw std::invalid_argument("RegularizationConfig: G must be positive on [0,1)");
    if (i > 0 && g < prev)
      throw std::invalid_argument("RegularizationConfig: G must be monotone increasing");
    prev = g;
  }
  if (!(G(1.0 - 1e-9) >= 1e6))
    throw std::invalid_argument("RegularizationConfig: G must blow up as lambda -> 1");
}

double mu_n(int n) {
  if (n < 2) throw std::invalid_argument("mu_n: n must be >= 2");
  return std::exp(std::log(static_cast<double>(n)) / (1.0 - n));
}

ModeVector smooth_data(const NoisyData& samples, double r, double s) {
  if (!(r > s && s > 0.0))
    throw std::invalid_argument("smooth_data: need r > s > 0");
  if (!(samples.epsilon > 0.0))
    throw std::invalid_argument("smooth_data: noise level must be positive");
  if (samples.x.size() != samples.values.size() || samples.x.size() < 2)
    throw std::invalid_argument("smooth_data: need matching sample arrays");
  for (std::size_t i = 0; i + 1 < samples.x.size(); ++i) {
    if (!(samples.x[i] < samples.x[i + 1]))
      throw std::invalid_argument("smooth_data: abscissae must be increasing");
  }

  const double raw_cutoff = std::ceil(std::pow(samples.epsilon, -1.0 / r));
  const int nyquist = static_cast<int>(samples.x.size()) / 2;
  const int j_max = std::max(1, std::min<int>(static_cast<int>(raw_cutoff), nyquist));

  ModeVector coeffs = ModeVector::Zero(j_max);
  for (int j = 1; j <= j_max; ++j) {
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < samples.x.size(); ++i) {
      const double fa = samples.values[i] * std::sin(j * samples.x[i]);
      const double fb = samples.values[i + 1] * std::sin(j * samples.x[i + 1]);
      integral += 0.5 * (fa + fb) * (samples.x[i + 1] - samples.x[i]);
    }
    coeffs[j - 1] = 2.0 / kPi * integral;
  }
  return coeffs;
}

double regularized_factor(const SpectralModel& model,
                          const RegularizationConfig& config, int j) {
  const double mu = model.mu(j);
  if (config.strategy == RegularizationStrategy::Cutoff)
    return cutoff_keeps(model, j, config.n) ? mu : 0.0;
  // mu - mu^n = -(mu_gap + expm1(n log1p(-mu_gap))), cancellation-free.
  const double mg = model.mu_gap(j);
  if (mg <= 0.0) return 0.0;
  return -(mg + std::expm1(static_cast<double>(config.n) * std::log1p(-mg)));
}

ModeVector apply_regularized(const SpectralModel& model,
                             const RegularizationConfig& config,
                             const ModeVector& phi) {
  validate(config);
  if (phi.size() != model.modes())
    throw std::invalid_argument("apply_regularized: length mismatch");
  ModeVector out(phi.size());
  for (int j = 1; j <= model.modes(); ++j)
    out[j - 1] = regularized_factor(model, config, j) * phi[j - 1];
  return out;
}

ModeVector regularized_fixed_point(const SpectralModel& model,
                                   const RegularizationConfig& config,
                                   const ModeVector& z_eps) {
  validate(config);
  if (z_eps.size() != model.modes())
    throw std::invalid_argument("regularized_fixed_point: length mismatch");
  ModeVector out(z_eps.size());
  for (int j = 1; j <= model.modes(); ++j)
    out[j - 1] = z_eps[j - 1] / one_minus_factor(model, config, j);
  return out;
}

ErrorSplit error_split(const SpectralModel& model, const RegularizationConfig& config,
                       const ModeVector& phi_bar, double epsilon) {
  validate(config);
  if (phi_bar.size() != model.modes())
    throw std::invalid_argument("error_split: length mismatch");

  ErrorSplit split;
  double approx2 = 0.0;
  double worst_amplification = 0.0;
  double lambda_best = 0.0, upsilon_best = 0.0;
  const double mu_thresh = mu_n(config.n);

  for (int j = 1; j <= model.modes(); ++j) {
    const double omf = one_minus_factor(model, config, j);
    worst_amplification = std::max(worst_amplification, 1.0 / omf);

    double deviation;  // factor_j - mu_j
    if (config.strategy == RegularizationStrategy::Cutoff) {
      deviation = cutoff_keeps(model, j, config.n) ? 0.0 : -model.mu(j);
    } else {
      deviation = -mu_pow(model, j, config.n);
    }
    const double contrib = deviation / omf * phi_bar[j - 1];
    approx2 += contrib * contrib;

    const double mu = model.mu(j);
    if (cutoff_keeps(model, j, config.n)) lambda_best = std::max(lambda_best, mu);
    if (mu < mu_thresh) upsilon_best = std::max(upsilon_best, mu);
  }

  split.approx_term = std::sqrt(approx2);
  split.noise_term = epsilon * worst_amplification;
  split.total_bound = split.approx_term + split.noise_term;
  split.Lambda = lambda_best;
  split.Upsilon = upsilon_best;
  return split;
}

double regularization_objective(const SpectralModel& model,
                                RegularizationStrategy strategy,
                                const std::function<double(double)>& G,
                                double phi_bar_norm, double M, double epsilon, int n) {
  if (n < 2) throw std::invalid_argument("regularization_objective: n must be >= 2");

  if (strategy == RegularizationStrategy::Cutoff) {
    // 1 - Lambda(n): gap of the largest kept eigenvalue, 1 when none kept.
    double lambda_gap = 1.0;
    bool any = false;
    for (int j = 1; j <= model.modes(); ++j) {
      if (cutoff_keeps(model, j, n)) {
        if (!any || model.mu_gap(j) < lambda_gap) lambda_gap = model.mu_gap(j);
        any = true;
      }
    }
    if (!any) lambda_gap = 1.0;
    return M / G(1.0 - 1.0 / n) + epsilon / lambda_gap;
  }

  const double mu = mu_n(n);
  const double mu_pow_n = std::pow(mu, n);
  const double first = mu_pow_n * phi_bar_norm / (1.0 + mu_pow_n - mu);

  // 1 + Upsilon^n - Upsilon via the gap of the largest eigenvalue below mu(n).
  double ups_den = 1.0;
  bool any = false;
  double best_mu = 0.0, best_gap = 1.0;
  for (int j = 1; j <= model.modes(); ++j) {
    const double m = model.mu(j);
    if (m < mu && (!any || m > best_mu)) {
      best_mu = m;
      best_gap = model.mu_gap(j);
      any = true;
    }
  }
  if (any)
    ups_den = best_gap + std::exp(static_cast<double>(n) * std::log1p(-best_gap));
  return first + M / G(mu) + epsilon / ups_den;
}

int optimal_n(const SpectralModel& model, RegularizationStrategy strategy,
              const std::function<double(double)>& G, double phi_bar_norm,
              double M, double epsilon, int n_max) {
  if (n_max < 2) throw std::invalid_argument("optimal_n: n_max must be >= 2");
  if (!(M > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("optimal_n: M and epsilon must be positive");

  int best_n = 2;
  double best = regularization_objective(model, strategy, G, phi_bar_norm, M, epsilon, 2);
  for (int n = 3; n <= n_max; ++n) {
    const double val =
        regularization_objective(model, strategy, G, phi_bar_norm, M, epsilon, n);
    if (val < best) {
      best = val;
      best_n = n;
    }
  }
  return best_n;
}

}  // namespace kmf
