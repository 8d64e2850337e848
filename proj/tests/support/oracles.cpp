#include "oracles.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "hdbeta/model.hpp"

using namespace hdbeta;

namespace oracle {

namespace {

double npdf_log(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

double ig_log(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double rate_for(const PriorSpec& pr, const std::vector<double>& block, int k) {
  const double mean = block.empty() ? pr.default_variance_mean : block[k];
  return mean * (pr.variance_shape - 1.0);
}

double m0_for(const std::vector<double>& block, int k) { return block.empty() ? 0.0 : block[k]; }

}  // namespace

double beta_density(double y, double mu, double phi) {
  const double a = mu * phi, b = (1.0 - mu) * phi;
  return std::exp(std::lgamma(phi) - std::lgamma(a) - std::lgamma(b)) * std::pow(y, a - 1.0) *
         std::pow(1.0 - y, b - 1.0);
}

double beta_normalization(double mu, double phi) {
  // fold (1/2,1) onto (0,1/2) via y -> 1-y
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [&](double y) {
    if (y <= 0.0) return 0.0;
    return std::exp(beta_logpdf(y, mu, phi)) + std::exp(beta_logpdf(y, 1.0 - mu, phi));
  };
  return integrator.integrate(f, 0.0, 0.5);
}

double beta_normalization_trapezoid(double mu, double phi, int n) {
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int k = 1; k < n; ++k) sum += std::exp(beta_logpdf(k * h, mu, phi));
  // Endpoint values are finite (zero or the limit) when a, b >= 1.
  const double a = mu * phi, b = (1.0 - mu) * phi;
  auto edge = [&](double shape, double other) {
    if (shape > 1.0) return 0.0;
    return std::exp(std::lgamma(phi) - std::lgamma(shape) - std::lgamma(other));
  };
  sum += 0.5 * (edge(a, b) + edge(b, a));
  return sum * h;
}

double log_likelihood(const ObservationTable& table, const ParameterState& s, Family family) {
  double total = 0.0;
  for (int i = 0; i < table.levels(); ++i)
    for (int j = 0; j < table.schools(i); ++j)
      for (int t = 0; t < table.years(); ++t) {
        const std::size_t k = table.offset({i, j, t});
        const auto x = table.mean_covariates(k);
        const auto qv = table.precision_covariates(k);
        const auto beta = s.beta_at(i, t);
        const auto delta = s.delta_at(i, t);
        double eta = 0.0, zeta = 0.0;
        for (int m = 0; m < table.p(); ++m) eta += x[m] * beta[m];
        for (int m = 0; m < table.q(); ++m) zeta += qv[m] * delta[m];
        const double phi = std::exp(-zeta);
        const double y = table.response(k);
        if (family == Family::beta) {
          const double mu = 1.0 / (1.0 + std::exp(-eta));
          total += std::log(beta_density(y, mu, phi));
        } else {
          const double z = std::log(y / (1.0 - y));
          total += npdf_log(z, eta, 1.0 / phi);
        }
      }
  return total;
}

double log_prior(const ParameterState& s, const ModelSpec& spec) {
  const auto& pr = spec.prior;
  const double a = pr.variance_shape, c0 = pr.initial_variance;
  const int I = s.levels, T = s.years, p = s.p, q = s.q;
  double lp = 0.0;
  for (int m = 0; m < p; ++m) {
    lp += npdf_log(s.alpha0[m], m0_for(pr.alpha_initial_mean, m), c0);
    lp += ig_log(s.W_alpha[m], a, rate_for(pr, pr.alpha_variance_mean, m));
    for (int t = 0; t < T; ++t) {
      const double prev = t == 0 ? s.alpha0[m] : s.alpha[(t - 1) * p + m];
      lp += npdf_log(s.alpha[t * p + m], prev, s.W_alpha[m]);
    }
    for (int i = 0; i < I; ++i) {
      const double v = s.V_beta[i * p + m];
      lp += ig_log(v, a, rate_for(pr, pr.beta_variance_mean, m));
      for (int t = 0; t < T; ++t) lp += npdf_log(s.beta[(i * T + t) * p + m], s.alpha[t * p + m], v);
    }
  }
  for (int k = 0; k < q; ++k) {
    const double m0 = m0_for(pr.gamma_initial_mean, k);
    const double bd = rate_for(pr, pr.delta_variance_mean, k);
    const double bg = rate_for(pr, pr.gamma_variance_mean, k);
    switch (spec.variant) {
      case PrecisionVariant::M1:
      case PrecisionVariant::M2:
        lp += npdf_log(s.delta_at(0, 0)[k], m0, c0);
        break;
      case PrecisionVariant::M3:
        lp += npdf_log(s.gamma[k], m0, c0);
        for (int i = 0; i < I; ++i) {
          const double v = s.V_delta[i * q + k];
          lp += ig_log(v, a, bd) + npdf_log(s.delta_at(i, 0)[k], s.gamma[k], v);
        }
        break;
      case PrecisionVariant::M4:
      case PrecisionVariant::M5: {
        lp += npdf_log(s.gamma0[k], m0, c0);
        lp += ig_log(s.W_gamma[k], a, bg);
        for (int t = 0; t < T; ++t) {
          const double prev = t == 0 ? s.gamma0[k] : s.gamma[(t - 1) * q + k];
          lp += npdf_log(s.gamma[t * q + k], prev, s.W_gamma[k]);
        }
        const int rows = spec.variant == PrecisionVariant::M4 ? 1 : I;
        for (int r = 0; r < rows; ++r) {
          const double v = s.V_delta[r * q + k];
          lp += ig_log(v, a, bd);
          for (int t = 0; t < T; ++t) lp += npdf_log(s.delta_at(r, t)[k], s.gamma[t * q + k], v);
        }
        break;
      }
    }
  }
  return lp;
}

Moments alpha_conditional(const ParameterState& s, const ModelSpec& spec, int t, int m) {
  const int p = s.p, T = s.years;
  const double W = s.W_alpha[m];
  double prec = 0.0, lin = 0.0;
  auto add = [&](double value, double var) {
    prec += 1.0 / var;
    lin += value / var;
  };
  if (t < 0) {
    add(m0_for(spec.prior.alpha_initial_mean, m), spec.prior.initial_variance);
    add(s.alpha[m], W);
  } else {
    for (int i = 0; i < s.levels; ++i) add(s.beta[(i * T + t) * p + m], s.V_beta[i * p + m]);
    add(t == 0 ? s.alpha0[m] : s.alpha[(t - 1) * p + m], W);
    if (t + 1 < T) add(s.alpha[(t + 1) * p + m], W);
  }
  return {lin / prec, 1.0 / prec};
}

double inverse_gamma_cdf(double x, double shape, double rate) {
  return boost::math::gamma_q(shape, rate / x);
}

double rps_double_sum(const std::vector<std::vector<double>>& sets, std::span<const double> observed) {
  double total = 0.0;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const auto& s = sets[k];
    const double n = static_cast<double>(s.size());
    double first = 0.0, second = 0.0;
    for (double a : s) {
      first += std::abs(a - observed[k]);
      for (double b : s) second += std::abs(a - b);
    }
    total += first / n - 0.5 * second / (n * n);
  }
  return total / static_cast<double>(sets.size());
}

double neg_log_mean_direct(std::span<const double> log_values) {
  double sum = 0.0;
  for (double v : log_values) sum += std::exp(v);
  return -std::log(sum / static_cast<double>(log_values.size()));
}

double strata_objective(std::span<const double> values, std::span<const double> boundaries) {
  const std::size_t H = boundaries.size() + 1;
  std::vector<double> n(H, 0.0), s(H, 0.0), ss(H, 0.0);
  for (double v : values) {
    std::size_t h = 0;
    while (h < boundaries.size() && v > boundaries[h]) ++h;
    n[h] += 1.0;
    s[h] += v;
    ss[h] += v * v;
  }
  const double N = static_cast<double>(values.size());
  double obj = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    if (n[h] < 2.0) continue;
    const double var = (ss[h] - s[h] * s[h] / n[h]) / (n[h] - 1.0);
    obj += n[h] / N * var;
  }
  return obj;
}

double grid_search_three_strata(std::span<const double> values, double lo, double hi, int points) {
  std::vector<double> grid(points);
  for (int g = 0; g < points; ++g) grid[g] = lo + (hi - lo) * (g + 1) / (points + 1.0);
  double best = INFINITY;
  for (int a = 0; a < points; ++a)
    for (int b = a + 1; b < points; ++b) {
      const double bounds[2] = {grid[a], grid[b]};
      best = std::min(best, strata_objective(values, bounds));
    }
  return best;
}

std::vector<double> standardize_four_step(std::span<const double> scores, std::span<const int> group,
                                          double max_score) {
  const int groups = *std::max_element(group.begin(), group.end()) + 1;
  std::vector<double> n(groups, 0.0), mean(groups, 0.0), m2(groups, 0.0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    n[group[k]] += 1.0;
    mean[group[k]] += scores[k];
  }
  for (int g = 0; g < groups; ++g) mean[g] /= n[g];
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double d = scores[k] - mean[group[k]];
    m2[group[k]] += d * d;
  }
  std::vector<double> out(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const int g = group[k];
    const double sd = std::sqrt(m2[g] / (n[g] - 1.0));
    const double z = (scores[k] - mean[g]) / sd;
    const double lo = (0.0 - mean[g]) / sd;
    const double hi = (max_score - mean[g]) / sd;
    out[k] = (z - lo) / (hi - lo);
  }
  return out;
}

}  // namespace oracle
