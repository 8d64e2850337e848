#include "hdbeta/simulate.hpp"

#include <cmath>

#include "hdbeta/error.hpp"
#include "hdbeta/rng.hpp"

namespace hdbeta {

namespace {

void check_block(const std::vector<double>& v, int n, const char* what, bool variance) {
  if (static_cast<int>(v.size()) != n)
    throw InputError(std::string("scenario ") + what + " must have " + std::to_string(n) + " entries");
  if (variance)
    for (double x : v)
      if (!(x >= 0.0)) throw InputError(std::string("scenario ") + what + " must be nonnegative");
}

double draw_covariate(const CovariateGenerator& g, Rng& rng) {
  switch (g.kind) {
    case CovariateKind::constant: return g.value;
    case CovariateKind::binary: return uniform01(rng) < g.probability ? 1.0 : 0.0;
    case CovariateKind::normal: return standard_normal(rng);
    case CovariateKind::lognormal_count:
      return std::max(1.0, std::round(std::exp(g.log_mean + g.log_sd * standard_normal(rng))));
  }
  return 0.0;
}

}  // namespace

void SimulationScenario::validate() const {
  if (levels < 1 || years < 1) throw InputError("scenario needs at least one level and one year");
  if (static_cast<int>(schools_per_level.size()) != levels)
    throw InputError("scenario schools_per_level must have one entry per level");
  for (int n : schools_per_level)
    if (n < 1) throw InputError("scenario needs at least one school per level");
  if (variant == PrecisionVariant::M1 && q() != 1) throw InputError("M1 scenarios take no precision covariates");
  check_block(alpha_start, p(), "alpha_start", false);
  check_block(gamma_start, q(), "gamma_start", false);
  check_block(W_alpha, p(), "W_alpha", true);
  check_block(V_beta, p(), "V_beta", true);
  check_block(W_gamma, q(), "W_gamma", true);
  check_block(V_delta, q(), "V_delta", true);
  for (const auto* list : {&mean_covariates, &precision_covariates})
    for (const auto& g : *list)
      if (g.kind == CovariateKind::binary && !(g.probability >= 0.0 && g.probability <= 1.0))
        throw InputError("binary covariate probability must lie in [0,1]");
}

SimulationScenario SimulationScenario::school_panel(std::uint64_t seed) {
  SimulationScenario s;
  s.seed = seed;
  s.mean_covariates = {
      {"ADM", CovariateKind::binary, 0.1, 1.0, 0.0, 0.0, true},
      {"HDI", CovariateKind::normal, 0.5, 1.0, 0.0, 0.0, true},
      {"LIB", CovariateKind::binary, 0.7, 1.0, 0.0, 0.0, false},
      {"LAB", CovariateKind::binary, 0.7, 1.0, 0.0, 0.0, false},
      {"BOYS", CovariateKind::normal, 0.5, 1.0, 0.0, 0.0, false},
  };
  s.precision_covariates = {{"nstudent", CovariateKind::lognormal_count, 0.5, 1.0, 3.0, 0.5, false}};
  s.alpha_start = {-0.8, 0.5, 0.2, 0.05, 0.05, 0.05};
  s.gamma_start = {-2.5, -0.2};
  s.W_alpha.assign(6, 0.01);
  s.V_beta.assign(6, 0.02);
  s.W_gamma.assign(2, 0.05);
  s.V_delta.assign(2, 0.1);
  return s;
}

ModelSpec model_spec_for(const SimulationScenario& scenario) {
  ModelSpec spec;
  spec.variant = scenario.variant;
  spec.family = scenario.family;
  spec.p = scenario.p();
  spec.q = scenario.q();
  for (const auto& g : scenario.mean_covariates) spec.design.mean_covariates.push_back(g.name);
  for (const auto& g : scenario.precision_covariates) spec.design.precision_covariates.push_back(g.name);
  return spec;
}

Simulation simulate_panel(const SimulationScenario& sc) {
  sc.validate();
  const int I = sc.levels, T = sc.years, p = sc.p(), q = sc.q();
  ModelSpec spec = model_spec_for(sc);
  ParameterState s = ParameterState::initial(I, T, spec);
  Rng rng = make_rng(sc.seed, "simulate");
  auto noise = [&](double variance) { return variance > 0.0 ? std::sqrt(variance) * standard_normal(rng) : 0.0; };

  // Mean structure.
  s.alpha0 = sc.alpha_start;
  for (int m = 0; m < p; ++m) {
    double prev = sc.alpha_start[m];
    for (int t = 0; t < T; ++t) {
      prev += noise(sc.W_alpha[m]);
      s.alpha_at(t)[m] = prev;
    }
  }
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t)
      for (int m = 0; m < p; ++m) s.beta_at(i, t)[m] = s.alpha_at(t)[m] + noise(sc.V_beta[m]);

  // Precision structure with the variant's tying.
  const auto& L = s.layout;
  if (L.dynamic()) {
    s.gamma0 = sc.gamma_start;
    for (int k = 0; k < q; ++k) {
      double prev = sc.gamma_start[k];
      for (int t = 0; t < T; ++t) {
        prev += noise(sc.W_gamma[k]);
        s.gamma[static_cast<std::size_t>(t) * q + k] = prev;
      }
    }
  } else if (L.hierarchical()) {
    for (int k = 0; k < q; ++k) s.gamma[k] = sc.gamma_start[k];
  }
  for (int u = 0; u < L.units(); ++u)
    for (int k = 0; k < q; ++k) {
      s.delta_unit(u)[k] = L.hierarchical()
                               ? s.gamma[static_cast<std::size_t>(L.gamma_slot(u)) * q + k] + noise(sc.V_delta[k])
                               : sc.gamma_start[k];
    }

  for (int i = 0; i < I; ++i)
    for (int m = 0; m < p; ++m) s.V_beta[static_cast<std::size_t>(i) * p + m] = sc.V_beta[m];
  s.W_alpha = sc.W_alpha;
  for (int r = 0; r < L.variance_rows(); ++r)
    for (int k = 0; k < q; ++k) s.V_delta[static_cast<std::size_t>(r) * q + k] = sc.V_delta[k];
  if (L.dynamic()) s.W_gamma = sc.W_gamma;

  // Covariates, storage order level / year / school.
  PanelShape shape{sc.schools_per_level, T};
  const std::size_t n = shape.observations();
  std::vector<double> x(n * p, 1.0), qv(n * q, 1.0);
  auto fill = [&](const std::vector<CovariateGenerator>& gens, std::vector<double>& out, int width) {
    for (std::size_t c = 0; c < gens.size(); ++c) {
      const auto& g = gens[c];
      std::vector<double> column(n);
      std::size_t k = 0;
      for (int i = 0; i < I; ++i) {
        std::vector<double> fixed(sc.schools_per_level[i]);
        if (g.time_invariant)
          for (auto& v : fixed) v = draw_covariate(g, rng);
        for (int t = 0; t < T; ++t)
          for (int j = 0; j < sc.schools_per_level[i]; ++j, ++k)
            column[k] = g.time_invariant ? fixed[j] : draw_covariate(g, rng);
      }
      if (g.kind == CovariateKind::lognormal_count) column = covariate_standardize(column);
      for (std::size_t r = 0; r < n; ++r) out[r * width + c + 1] = column[r];
    }
  };
  fill(sc.mean_covariates, x, p);
  fill(sc.precision_covariates, qv, q);

  // Responses.
  std::vector<double> y(n);
  std::size_t k = 0;
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t) {
      auto beta = s.beta_at(i, t);
      auto delta = s.delta_at(i, t);
      for (int j = 0; j < sc.schools_per_level[i]; ++j, ++k) {
        double eta = 0.0, lp = 0.0;
        for (int m = 0; m < p; ++m) eta += x[k * p + m] * beta[m];
        for (int c = 0; c < q; ++c) lp -= qv[k * q + c] * delta[c];
        const double phi = std::exp(lp);
        if (sc.family == Family::beta) {
          const double mu = inverse_logit(eta);
          y[k] = beta_variate(mu * phi, (1.0 - mu) * phi, rng);
        } else {
          y[k] = inverse_logit(eta + standard_normal(rng) / std::sqrt(phi));
        }
      }
    }

  std::vector<std::string> mean_names{"intercept"}, precision_names{"intercept"};
  for (const auto& g : sc.mean_covariates) mean_names.push_back(g.name);
  for (const auto& g : sc.precision_covariates) precision_names.push_back(g.name);
  ObservationTable table(shape, PanelLabels::numbered(shape), std::move(mean_names),
                         std::move(precision_names), std::move(y), std::move(x), std::move(qv));
  return {std::move(table), std::move(s)};
}

}  // namespace hdbeta
