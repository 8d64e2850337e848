#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdbeta/model.hpp"
#include "hdbeta/panel.hpp"

namespace hdbeta {

enum class CovariateKind {
  constant,         // `value` everywhere
  binary,           // Bernoulli(probability)
  normal,           // N(0, 1)
  lognormal_count,  // round(exp(N(log_mean, log_sd))), then z-scored over the table
};

struct CovariateGenerator {
  std::string name;
  CovariateKind kind = CovariateKind::normal;
  double probability = 0.5;
  double value = 1.0;
  double log_mean = 3.0;
  double log_sd = 0.5;
  /// Drawn once per school and repeated every year.
  bool time_invariant = false;
};

/// True hyperparameters are per component and shared across levels; zero
/// variances give deterministic paths.
struct SimulationScenario {
  int levels = 3;
  int years = 8;
  std::vector<int> schools_per_level{50, 50, 50};
  std::vector<CovariateGenerator> mean_covariates;       // intercept implicit
  std::vector<CovariateGenerator> precision_covariates;  // intercept implicit
  PrecisionVariant variant = PrecisionVariant::M5;
  Family family = Family::beta;
  std::vector<double> alpha_start;  // alpha_0, length p
  std::vector<double> gamma_start;  // gamma_0, length q
  std::vector<double> W_alpha;
  std::vector<double> V_beta;
  std::vector<double> W_gamma;
  std::vector<double> V_delta;
  std::uint64_t seed = 1;

  int p() const { return static_cast<int>(mean_covariates.size()) + 1; }
  int q() const { return static_cast<int>(precision_covariates.size()) + 1; }
  void validate() const;

  /// Intercept, ADM-like binary (0.1), HDI-like normal, LIB/LAB-like binaries
  /// (0.7), BOYS-like normal; precision on intercept and a standardized
  /// log-normal student count.
  static SimulationScenario school_panel(std::uint64_t seed = 1);
};

struct Simulation {
  ObservationTable table;
  ParameterState truth;
};

/// Random walks for alpha and gamma from their start values, level effects
/// around them with the variant's delta tying, covariates, then responses.
Simulation simulate_panel(const SimulationScenario& scenario);

/// ModelSpec matching a scenario's design (variant, family, p, q).
ModelSpec model_spec_for(const SimulationScenario& scenario);

}  // namespace hdbeta
