#include "hdbeta/mcmc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "hdbeta/error.hpp"

namespace hdbeta {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string cell_name(const char* what, int i, int t) {
  return std::string(what) + "[i=" + std::to_string(i + 1) + ",t=" + std::to_string(t + 1) + "]";
}

GaussianConditional from_natural(double precision, double weighted_sum) {
  return {weighted_sum / precision, 1.0 / precision};
}

double draw(const GaussianConditional& c, Rng& rng) {
  return c.mean + std::sqrt(c.variance) * standard_normal(rng);
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 1) throw InputError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw InputError("burn_in must lie in [0, iterations)");
  if (thin < 1) throw InputError("thin must be at least 1");
  if (chains < 1) throw InputError("chains must be at least 1");
  if (adapt_window < 1) throw InputError("adapt_window must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target_accept must lie in (0,1)");
}

// ---------------------------------------------------------------------------
// Metropolis kernel

MhStep mh_update_block(std::span<const double> current, const LogDensity& log_density,
                       std::span<const double> scale, Rng& rng) {
  return mh_update_block(current, log_density(current), log_density, scale, rng);
}

MhStep mh_update_block(std::span<const double> current, double current_log_density,
                       const LogDensity& log_density, std::span<const double> scale, Rng& rng) {
  if (!std::isfinite(current_log_density))
    throw std::runtime_error("Metropolis update started from a state with non-finite log-density");
  if (scale.size() != current.size()) throw std::invalid_argument("scale has the wrong length");
  std::vector<double> proposal(current.begin(), current.end());
  for (std::size_t c = 0; c < proposal.size(); ++c) proposal[c] += scale[c] * standard_normal(rng);
  const double proposed = log_density(proposal);
  const double log_u = std::log(uniform01(rng));
  if (!std::isnan(proposed) && log_u < proposed - current_log_density) {
    return {std::move(proposal), proposed, true};
  }
  return {std::vector<double>(current.begin(), current.end()), current_log_density, false};
}

// ---------------------------------------------------------------------------
// Gaussian full conditionals

GaussianConditional alpha_full_conditional(const ParameterState& s, const ModelSpec& spec, int t,
                                           int m) {
  const double W = s.W_alpha[m];
  const int T = s.years;
  if (t < 0) {
    const double c0 = spec.prior.initial_variance;
    const double m0 = spec.prior.initial_mean(spec.prior.alpha_initial_mean, m);
    return from_natural(1.0 / c0 + 1.0 / W, m0 / c0 + s.alpha_at(0)[m] / W);
  }
  double precision = 0.0, sum = 0.0;
  for (int i = 0; i < s.levels; ++i) {
    const double V = s.V_beta_at(i, m);
    precision += 1.0 / V;
    sum += s.beta_at(i, t)[m] / V;
  }
  const double prev = t == 0 ? s.alpha0[m] : s.alpha_at(t - 1)[m];
  precision += 1.0 / W;
  sum += prev / W;
  if (t + 1 < T) {
    precision += 1.0 / W;
    sum += s.alpha_at(t + 1)[m] / W;
  }
  return from_natural(precision, sum);
}

GaussianConditional gamma_full_conditional(const ParameterState& s, const ModelSpec& spec,
                                           int slot, int k) {
  const auto& L = s.layout;
  if (!L.hierarchical()) throw std::logic_error("variant has no gamma layer");
  const double c0 = spec.prior.initial_variance;
  const double m0 = spec.prior.initial_mean(spec.prior.gamma_initial_mean, k);
  const auto Q = static_cast<std::size_t>(s.q);
  auto gamma = [&](int g) { return s.gamma[static_cast<std::size_t>(g) * Q + k]; };

  if (slot < 0) {
    if (!L.dynamic()) throw std::logic_error("variant has no gamma_0 node");
    const double W = s.W_gamma[k];
    return from_natural(1.0 / c0 + 1.0 / W, m0 / c0 + gamma(0) / W);
  }
  double precision = 0.0, sum = 0.0;
  for (int u = 0; u < L.units(); ++u) {
    if (L.gamma_slot(u) != slot) continue;
    const double V = s.V_delta_at(L.variance_row(u), k);
    precision += 1.0 / V;
    sum += s.delta_unit(u)[k] / V;
  }
  if (L.dynamic()) {
    const double W = s.W_gamma[k];
    const double prev = slot == 0 ? s.gamma0[k] : gamma(slot - 1);
    precision += 1.0 / W;
    sum += prev / W;
    if (slot + 1 < L.gamma_slots()) {
      precision += 1.0 / W;
      sum += gamma(slot + 1) / W;
    }
  } else {
    precision += 1.0 / c0;
    sum += m0 / c0;
  }
  return from_natural(precision, sum);
}

void gibbs_update_alpha(ParameterState& s, const ModelSpec& spec, Rng& rng) {
  for (int m = 0; m < s.p; ++m) {
    s.alpha0[m] = draw(alpha_full_conditional(s, spec, -1, m), rng);
    for (int t = 0; t < s.years; ++t) s.alpha_at(t)[m] = draw(alpha_full_conditional(s, spec, t, m), rng);
  }
}

void gibbs_update_gamma(ParameterState& s, const ModelSpec& spec, Rng& rng) {
  const auto& L = s.layout;
  if (!L.hierarchical()) return;
  const auto Q = static_cast<std::size_t>(s.q);
  for (int k = 0; k < s.q; ++k) {
    if (L.dynamic()) s.gamma0[k] = draw(gamma_full_conditional(s, spec, -1, k), rng);
    for (int g = 0; g < L.gamma_slots(); ++g)
      s.gamma[static_cast<std::size_t>(g) * Q + k] = draw(gamma_full_conditional(s, spec, g, k), rng);
  }
}

// ---------------------------------------------------------------------------
// Inverse-gamma full conditionals

InverseGammaConditional variance_full_conditional(const ParameterState& s, const ModelSpec& spec,
                                                  VarianceBlock block, int row, int component) {
  const auto& pr = spec.prior;
  const double a = pr.variance_shape;
  const auto Q = static_cast<std::size_t>(s.q);
  double n = 0.0, ss = 0.0;
  double rate0 = 0.0;
  switch (block) {
    case VarianceBlock::V_beta: {
      rate0 = pr.variance_rate(pr.beta_variance_mean, component);
      for (int t = 0; t < s.years; ++t) {
        const double d = s.beta_at(row, t)[component] - s.alpha_at(t)[component];
        ss += d * d;
        n += 1.0;
      }
      break;
    }
    case VarianceBlock::W_alpha: {
      rate0 = pr.variance_rate(pr.alpha_variance_mean, component);
      double prev = s.alpha0[component];
      for (int t = 0; t < s.years; ++t) {
        const double d = s.alpha_at(t)[component] - prev;
        ss += d * d;
        n += 1.0;
        prev = s.alpha_at(t)[component];
      }
      break;
    }
    case VarianceBlock::V_delta: {
      rate0 = pr.variance_rate(pr.delta_variance_mean, component);
      const auto& L = s.layout;
      for (int u = 0; u < L.units(); ++u) {
        if (L.variance_row(u) != row) continue;
        const double d = s.delta_unit(u)[component] -
                         s.gamma[static_cast<std::size_t>(L.gamma_slot(u)) * Q + component];
        ss += d * d;
        n += 1.0;
      }
      break;
    }
    case VarianceBlock::W_gamma: {
      rate0 = pr.variance_rate(pr.gamma_variance_mean, component);
      double prev = s.gamma0[component];
      for (int t = 0; t < s.layout.gamma_slots(); ++t) {
        const double g = s.gamma[static_cast<std::size_t>(t) * Q + component];
        ss += (g - prev) * (g - prev);
        n += 1.0;
        prev = g;
      }
      break;
    }
  }
  return {a + 0.5 * n, rate0 + 0.5 * ss};
}

void gibbs_update_variances(ParameterState& s, const ModelSpec& spec, Rng& rng) {
  auto sample = [&](VarianceBlock b, int row, int c) {
    auto ig = variance_full_conditional(s, spec, b, row, c);
    return inverse_gamma_variate(ig.shape, ig.rate, rng);
  };
  const auto P = static_cast<std::size_t>(s.p), Q = static_cast<std::size_t>(s.q);
  for (int i = 0; i < s.levels; ++i)
    for (int m = 0; m < s.p; ++m) s.V_beta[i * P + m] = sample(VarianceBlock::V_beta, i, m);
  for (int m = 0; m < s.p; ++m) s.W_alpha[m] = sample(VarianceBlock::W_alpha, 0, m);
  for (int r = 0; r < s.layout.variance_rows(); ++r)
    for (int k = 0; k < s.q; ++k) s.V_delta[r * Q + k] = sample(VarianceBlock::V_delta, r, k);
  if (s.layout.dynamic())
    for (int k = 0; k < s.q; ++k) s.W_gamma[k] = sample(VarianceBlock::W_gamma, 0, k);
}

// ---------------------------------------------------------------------------
// Warm start

namespace {

// Damped Newton ascent on one cell's likelihood with finite-difference
// derivatives. Returns nullopt-like empty vector when the cell is too small.
std::vector<double> fit_cell(const ObservationTable& table, int i, int t, Family family) {
  const int p = table.p(), q = table.q(), d = p + q;
  const int n = table.schools(i);
  if (n < d + 2) return {};

  auto f = [&](const Eigen::VectorXd& th) {
    return cell_log_likelihood(table, i, t, std::span<const double>(th.data(), p),
                               std::span<const double>(th.data() + p, q), family);
  };

  // Moment-based start for the intercepts.
  const std::size_t begin = table.cell_begin(i, t);
  double mean = 0.0, var = 0.0;
  for (int j = 0; j < n; ++j) mean += table.response(begin + j);
  mean /= n;
  for (int j = 0; j < n; ++j) var += std::pow(table.response(begin + j) - mean, 2);
  var /= (n - 1);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(d);
  th[0] = std::log(mean / (1.0 - mean));
  if (family == Family::beta) {
    const double phi = std::max(1.0, mean * (1.0 - mean) / std::max(var, 1e-12) - 1.0);
    th[p] = -std::log(phi);
  } else {
    double lv = 0.0, lm = 0.0;
    for (int j = 0; j < n; ++j) {
      const double y = table.response(begin + j);
      const double z = std::log(y / (1.0 - y));
      lm += z;
      lv += z * z;
    }
    lm /= n;
    lv = std::max(1e-6, lv / n - lm * lm);
    th[0] = lm;
    th[p] = std::log(lv);
  }

  double current = f(th);
  if (!std::isfinite(current)) return {};
  const double h = 1e-4;
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::VectorXd g(d);
    Eigen::MatrixXd H(d, d);
    for (int a = 0; a < d; ++a) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      e[a] = h;
      const double fp = f(th + e), fm = f(th - e);
      g[a] = (fp - fm) / (2 * h);
      H(a, a) = (fp - 2 * current + fm) / (h * h);
      for (int b = 0; b < a; ++b) {
        Eigen::VectorXd e2 = Eigen::VectorXd::Zero(d);
        e2[b] = h;
        H(a, b) = H(b, a) =
            (f(th + e + e2) - f(th + e - e2) - f(th - e + e2) + f(th - e - e2)) / (4 * h * h);
      }
    }
    double lambda = 1e-6;
    bool improved = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      Eigen::MatrixXd A = -H;
      A.diagonal().array() += lambda * (1.0 + A.diagonal().array().abs());
      step = A.ldlt().solve(g);
      if (step.norm() > 5.0) step *= 5.0 / step.norm();
      const double cand = f(th + step);
      if (std::isfinite(cand) && cand >= current) {
        th += step;
        current = cand;
        improved = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved || step.norm() < 1e-8) break;
  }
  return {th.data(), th.data() + d};
}

double mean_square(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : s / v.size();
}

double clamp_variance(double v) { return std::clamp(v, 1e-3, 10.0); }

}  // namespace

WarmStart warm_start(const ObservationTable& table, const ModelSpec& spec) {
  const int I = table.levels(), T = table.years(), p = spec.p, q = spec.q;
  ParameterState s = ParameterState::initial(I, T, spec);
  PriorSpec prior = spec.prior;

  // Per-cell fits; cells that cannot be fitted inherit the year average.
  std::vector<std::vector<double>> fits(static_cast<std::size_t>(I) * T);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) fits[static_cast<std::size_t>(i) * T + t] = fit_cell(table, i, t, spec.family);

  auto fitted = [&](int i, int t) -> const std::vector<double>& { return fits[static_cast<std::size_t>(i) * T + t]; };
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < p + q; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < I; ++i)
        if (!fitted(i, t).empty()) {
          sum += fitted(i, t)[c];
          ++count;
        }
      if (count == 0) continue;
      const double avg = sum / count;
      for (int i = 0; i < I; ++i) {
        auto& fv = fits[static_cast<std::size_t>(i) * T + t];
        if (fv.empty()) fv.assign(p + q, 0.0);
        if (count < I && fv[c] == 0.0) fv[c] = avg;
      }
    }
  }
  for (auto& fv : fits)
    if (fv.empty()) fv.assign(p + q, 0.0);

  // Mean coefficients.
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t)
      for (int m = 0; m < p; ++m) s.beta_at(i, t)[m] = fitted(i, t)[m];
  for (int t = 0; t < T; ++t)
    for (int m = 0; m < p; ++m) {
      double a = 0.0;
      for (int i = 0; i < I; ++i) a += s.beta_at(i, t)[m];
      s.alpha_at(t)[m] = a / I;
    }
  for (int m = 0; m < p; ++m) s.alpha0[m] = s.alpha_at(0)[m];

  prior.beta_variance_mean.assign(p, 0.0);
  prior.alpha_variance_mean.assign(p, 0.0);
  for (int m = 0; m < p; ++m) {
    std::vector<double> dev, steps;
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) dev.push_back(s.beta_at(i, t)[m] - s.alpha_at(t)[m]);
    for (int t = 1; t < T; ++t) steps.push_back(s.alpha_at(t)[m] - s.alpha_at(t - 1)[m]);
    prior.beta_variance_mean[m] =
        I > 1 ? clamp_variance(mean_square(dev)) : spec.prior.variance_mean(spec.prior.beta_variance_mean, m);
    prior.alpha_variance_mean[m] =
        T > 1 ? clamp_variance(mean_square(steps)) : spec.prior.variance_mean(spec.prior.alpha_variance_mean, m);
  }

  // Precision coefficients, averaged over the cells each unit ties together.
  const auto& L = s.layout;
  std::vector<int> unit_count(L.units(), 0);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      const int u = L.unit_of(i, t);
      for (int k = 0; k < q; ++k) s.delta_unit(u)[k] += fitted(i, t)[p + k];
      ++unit_count[u];
    }
  for (int u = 0; u < L.units(); ++u)
    for (int k = 0; k < q; ++k) s.delta_unit(u)[k] /= unit_count[u];

  prior.delta_variance_mean.assign(q, 0.0);
  prior.gamma_variance_mean.assign(q, 0.0);
  for (int k = 0; k < q; ++k) {
    std::vector<double> dev, steps;
    for (int g = 0; g < L.gamma_slots(); ++g) {
      double sum = 0.0;
      int count = 0;
      for (int u = 0; u < L.units(); ++u)
        if (L.gamma_slot(u) == g) {
          sum += s.delta_unit(u)[k];
          ++count;
        }
      s.gamma[static_cast<std::size_t>(g) * q + k] = sum / count;
      for (int u = 0; u < L.units(); ++u)
        if (L.gamma_slot(u) == g && count > 1) dev.push_back(s.delta_unit(u)[k] - sum / count);
    }
    if (L.dynamic()) {
      s.gamma0[k] = s.gamma[k];
      for (int t = 1; t < T; ++t)
        steps.push_back(s.gamma[static_cast<std::size_t>(t) * q + k] - s.gamma[static_cast<std::size_t>(t - 1) * q + k]);
    }
    prior.delta_variance_mean[k] = dev.empty() ? spec.prior.variance_mean(spec.prior.delta_variance_mean, k)
                                               : clamp_variance(mean_square(dev));
    prior.gamma_variance_mean[k] = steps.empty() ? spec.prior.variance_mean(spec.prior.gamma_variance_mean, k)
                                                 : clamp_variance(mean_square(steps));
  }

  // Variances start at the new prior means.
  ModelSpec adjusted = spec;
  adjusted.prior = prior;
  ParameterState fresh = ParameterState::initial(I, T, adjusted);
  s.V_beta = fresh.V_beta;
  s.W_alpha = fresh.W_alpha;
  s.V_delta = fresh.V_delta;
  s.W_gamma = fresh.W_gamma;
  return {std::move(s), std::move(prior)};
}

// ---------------------------------------------------------------------------
// Chain driver

namespace {

struct Block {
  std::string name;
  int dim = 0;
  double target = 0.234;
  double log_multiplier = 0.0;
  std::vector<double> base_sd;
  std::vector<double> scale;
  int window_accepted = 0;
  int window_tried = 0;
  int windows = 0;
  long long accepted = 0;
  long long tried = 0;
  // Running moments of the block during burn-in.
  long long n = 0;
  std::vector<double> mean, m2;

  void init(std::string block_name, int d, double target_large) {
    name = std::move(block_name);
    dim = d;
    target = d >= 5 ? target_large : 0.44 + (target_large - 0.44) * (d - 1) / 4.0;
    log_multiplier = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    base_sd.assign(d, 0.1 * std::sqrt(static_cast<double>(d)) / 2.38);
    mean.assign(d, 0.0);
    m2.assign(d, 0.0);
    refresh();
  }

  void refresh() {
    scale.resize(dim);
    const double mult = std::exp(log_multiplier);
    for (int c = 0; c < dim; ++c) scale[c] = mult * base_sd[c];
  }

  void record(bool ok) {
    window_accepted += ok;
    window_tried += 1;
    accepted += ok;
    tried += 1;
  }

  void observe(std::span<const double> x) {
    ++n;
    for (int c = 0; c < dim; ++c) {
      const double delta = x[c] - mean[c];
      mean[c] += delta / n;
      m2[c] += delta * (x[c] - mean[c]);
    }
  }

  // Robbins-Monro step on the log multiplier; the per-component base scale
  // follows the running posterior standard deviation once it is available.
  void adapt() {
    if (window_tried == 0) return;
    ++windows;
    const double rate = static_cast<double>(window_accepted) / window_tried;
    log_multiplier += (rate - target) / std::sqrt(static_cast<double>(windows));
    if (n >= 100) {
      for (int c = 0; c < dim; ++c) base_sd[c] = std::max(1e-6, std::sqrt(m2[c] / (n - 1)));
    }
    window_accepted = window_tried = 0;
    refresh();
  }

  void reset_counts() { accepted = tried = 0; }
};

}  // namespace

ChainOutput run_chain(const ObservationTable& table, const ModelSpec& spec_in,
                      const SamplerConfig& config, int chain_index, const Progress& progress) {
  config.validate();
  spec_in.validate();
  if (table.p() != spec_in.p || table.q() != spec_in.q)
    throw InputError("model p/q do not match the observation table design");

  const int I = table.levels(), T = table.years(), p = spec_in.p, q = spec_in.q;
  ModelSpec spec = spec_in;
  ParameterState s = ParameterState::initial(I, T, spec);
  if (config.warm_start && table.size() > 0) {
    auto ws = warm_start(table, spec);
    s = std::move(ws.state);
    spec.prior = std::move(ws.prior);
  }
  const auto& pr = spec.prior;
  const auto& L = s.layout;
  Rng rng = make_rng(config.seed, "chain", static_cast<std::uint64_t>(chain_index));

  // Cached cell log-likelihoods under the current (beta, delta).
  std::vector<double> cell_ll(static_cast<std::size_t>(I) * T);
  auto cell = [&](int i, int t) -> double& { return cell_ll[static_cast<std::size_t>(i) * T + t]; };
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t)
      cell(i, t) = cell_log_likelihood(table, i, t, s.beta_at(i, t), s.delta_at(i, t), spec.family);

  std::vector<std::vector<std::pair<int, int>>> unit_cells(L.units());
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) unit_cells[L.unit_of(i, t)].emplace_back(i, t);

  auto beta_prior = [&](int i, int t, std::span<const double> b) {
    double lp = 0.0;
    for (int m = 0; m < p; ++m) lp += normal_logpdf(b[m], s.alpha_at(t)[m], s.V_beta_at(i, m));
    return lp;
  };
  auto delta_prior = [&](int u, std::span<const double> d) {
    double lp = 0.0;
    if (L.hierarchical()) {
      const int g = L.gamma_slot(u), r = L.variance_row(u);
      for (int k = 0; k < q; ++k)
        lp += normal_logpdf(d[k], s.gamma[static_cast<std::size_t>(g) * q + k], s.V_delta_at(r, k));
    } else {
      for (int k = 0; k < q; ++k)
        lp += normal_logpdf(d[k], pr.initial_mean(pr.gamma_initial_mean, k), pr.initial_variance);
    }
    return lp;
  };

  std::vector<Block> beta_blocks(static_cast<std::size_t>(I) * T);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      auto& b = beta_blocks[static_cast<std::size_t>(i) * T + t];
      b.init(cell_name("beta", i, t), p, config.target_accept);
      if (!std::isfinite(cell(i, t) + beta_prior(i, t, s.beta_at(i, t))))
        throw std::runtime_error("non-finite log posterior at initialization in block " + b.name);
    }
  std::vector<Block> delta_blocks(L.units());
  for (int u = 0; u < L.units(); ++u) {
    std::string name = "delta";
    const int lvl = L.level_of_unit(u), yr = L.year_of_unit(u);
    if (lvl >= 0 && yr >= 0) name = cell_name("delta", lvl, yr);
    else if (lvl >= 0) name += "[i=" + std::to_string(lvl + 1) + "]";
    else if (yr >= 0) name += "[t=" + std::to_string(yr + 1) + "]";
    delta_blocks[u].init(name, q, config.target_accept);
    double ll = 0.0;
    for (auto [i, t] : unit_cells[u]) ll += cell(i, t);
    if (!std::isfinite(ll + delta_prior(u, s.delta_unit(u))))
      throw std::runtime_error("non-finite log posterior at initialization in block " + delta_blocks[u].name);
  }

  ChainOutput out;
  out.chain = chain_index;
  out.prior = pr;
  out.draws.reserve(config.stored_draws());
  const int moments_from = config.burn_in / 4;

  std::vector<double> proposed_cells;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const bool burning = iter < config.burn_in;
    if (iter == config.burn_in) {
      for (auto& b : beta_blocks) b.reset_counts();
      for (auto& b : delta_blocks) b.reset_counts();
    }

    // 1. beta_it
    for (int i = 0; i < I; ++i) {
      for (int t = 0; t < T; ++t) {
        auto& blk = beta_blocks[static_cast<std::size_t>(i) * T + t];
        auto delta = s.delta_at(i, t);
        double new_ll = 0.0;
        LogDensity target = [&](std::span<const double> b) {
          new_ll = cell_log_likelihood(table, i, t, b, delta, spec.family);
          return new_ll + beta_prior(i, t, b);
        };
        const double current = cell(i, t) + beta_prior(i, t, s.beta_at(i, t));
        auto step = mh_update_block(s.beta_at(i, t), current, target, blk.scale, rng);
        blk.record(step.accepted);
        if (step.accepted) {
          std::copy(step.value.begin(), step.value.end(), s.beta_at(i, t).begin());
          cell(i, t) = new_ll;
        }
        if (burning && iter >= moments_from) blk.observe(s.beta_at(i, t));
      }
    }

    // 2. alpha
    gibbs_update_alpha(s, spec, rng);

    // 3. delta units
    for (int u = 0; u < L.units(); ++u) {
      auto& blk = delta_blocks[u];
      const auto& cells = unit_cells[u];
      proposed_cells.assign(cells.size(), 0.0);
      LogDensity target = [&](std::span<const double> d) {
        double ll = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          const auto [i, t] = cells[c];
          proposed_cells[c] = cell_log_likelihood(table, i, t, s.beta_at(i, t), d, spec.family);
          ll += proposed_cells[c];
        }
        return ll + delta_prior(u, d);
      };
      double current = delta_prior(u, s.delta_unit(u));
      for (auto [i, t] : cells) current += cell(i, t);
      auto step = mh_update_block(s.delta_unit(u), current, target, blk.scale, rng);
      blk.record(step.accepted);
      if (step.accepted) {
        std::copy(step.value.begin(), step.value.end(), s.delta_unit(u).begin());
        for (std::size_t c = 0; c < cells.size(); ++c) cell(cells[c].first, cells[c].second) = proposed_cells[c];
      }
      if (burning && iter >= moments_from) blk.observe(s.delta_unit(u));
    }

    // 4. gamma, 5. variances
    gibbs_update_gamma(s, spec, rng);
    gibbs_update_variances(s, spec, rng);

    if (burning && (iter + 1) % config.adapt_window == 0) {
      for (auto& b : beta_blocks) b.adapt();
      for (auto& b : delta_blocks) b.adapt();
    }
    if (!burning && (iter - config.burn_in + 1) % config.thin == 0) {
      double ll = 0.0;
      for (double c : cell_ll) ll += c;
      out.draws.push_back(s);
      out.log_likelihoods.push_back(ll);
      out.deviances.push_back(-2.0 * ll);
    }
    if (progress && (iter + 1) % 1000 == 0) progress(chain_index, iter + 1);
  }

  for (const auto* blocks : {&beta_blocks, &delta_blocks}) {
    for (const auto& b : *blocks) {
      BlockTuning tuning;
      tuning.name = b.name;
      tuning.acceptance_rate = b.tried ? static_cast<double>(b.accepted) / b.tried : 0.0;
      tuning.scale = b.scale;
      out.blocks.push_back(std::move(tuning));
    }
  }
  return out;
}

std::vector<ChainOutput> run_chains(const ObservationTable& table, const ModelSpec& spec,
                                    const SamplerConfig& config, const Progress& progress) {
  config.validate();
  std::vector<ChainOutput> outputs(config.chains);
  if (config.chains == 1) {
    outputs[0] = run_chain(table, spec, config, 0, progress);
    return outputs;
  }
  std::vector<std::exception_ptr> errors(config.chains);
  std::vector<std::thread> workers;
  for (int c = 0; c < config.chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        outputs[c] = run_chain(table, spec, config, c, progress);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

}  // namespace hdbeta
