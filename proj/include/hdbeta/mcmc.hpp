#pragma once

// Metropolis-within-Gibbs sampler for the hierarchical dynamic beta model.
//
// One sweep updates, in order:
//   1. every beta_it block by random-walk Metropolis (cell likelihood + prior),
//   2. alpha_0 and alpha_1..alpha_T by their Gaussian full conditionals,
//   3. every delta unit (at the variant's tying) by random-walk Metropolis,
//   4. gamma (when the variant has a gamma layer) by Gaussian full conditionals,
//   5. every variance entry by its inverse-gamma full conditional.
// Proposal scales adapt during burn-in only.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hdbeta/model.hpp"
#include "hdbeta/panel.hpp"
#include "hdbeta/rng.hpp"

namespace hdbeta {

struct SamplerConfig {
  int iterations = 35000;
  int burn_in = 5000;
  int thin = 30;
  std::uint64_t seed = 1;
  int chains = 1;
  int adapt_window = 50;
  /// Target for blocks of dimension >= 5; scalar blocks aim at 0.44 and
  /// intermediate sizes interpolate linearly.
  double target_accept = 0.234;
  bool warm_start = false;

  int stored_draws() const { return (iterations - burn_in) / thin; }
  void validate() const;
};

struct BlockTuning {
  std::string name;
  double acceptance_rate = 0.0;  // post burn-in (whole run if there is none)
  std::vector<double> scale;     // final proposal standard deviations
};

struct ChainOutput {
  int chain = 0;
  std::vector<ParameterState> draws;
  std::vector<double> log_likelihoods;
  std::vector<double> deviances;  // -2 * log-likelihood
  std::vector<BlockTuning> blocks;
  /// Prior actually used (differs from the input spec after a warm start).
  PriorSpec prior;

  std::size_t size() const { return draws.size(); }
};

using LogDensity = std::function<double(std::span<const double>)>;

struct MhStep {
  std::vector<double> value;
  double log_density = 0.0;
  bool accepted = false;
};

/// One random-walk Metropolis step with proposal current + scale * N(0, I).
/// Throws std::runtime_error if the log-density is not finite at `current`.
MhStep mh_update_block(std::span<const double> current, const LogDensity& log_density,
                       std::span<const double> scale, Rng& rng);
MhStep mh_update_block(std::span<const double> current, double current_log_density,
                       const LogDensity& log_density, std::span<const double> scale, Rng& rng);

struct GaussianConditional {
  double mean = 0.0;
  double variance = 0.0;
};

struct InverseGammaConditional {
  double shape = 0.0;
  double rate = 0.0;
};

/// Full conditional of alpha_{t,m}; t = -1 addresses the alpha_0 node.
GaussianConditional alpha_full_conditional(const ParameterState& s, const ModelSpec& spec, int t,
                                           int m);
/// Full conditional of the gamma slot (year for M4/M5, the single slot for
/// M3); slot = -1 addresses gamma_0. Only defined for hierarchical layouts.
GaussianConditional gamma_full_conditional(const ParameterState& s, const ModelSpec& spec,
                                           int slot, int k);

enum class VarianceBlock { V_beta, W_alpha, V_delta, W_gamma };

/// Full conditional of one variance entry; `row` is the level for V_beta
/// and the V_delta row, ignored otherwise.
InverseGammaConditional variance_full_conditional(const ParameterState& s, const ModelSpec& spec,
                                                  VarianceBlock block, int row, int component);

void gibbs_update_alpha(ParameterState& s, const ModelSpec& spec, Rng& rng);
void gibbs_update_gamma(ParameterState& s, const ModelSpec& spec, Rng& rng);
void gibbs_update_variances(ParameterState& s, const ModelSpec& spec, Rng& rng);

/// Independent per-(level, year) maximum-likelihood fits used to start the
/// chain and to set the prior means of the variance blocks.
struct WarmStart {
  ParameterState state;
  PriorSpec prior;
};
WarmStart warm_start(const ObservationTable& table, const ModelSpec& spec);

/// Called every 1000 iterations with (chain, iteration).
using Progress = std::function<void(int, int)>;

/// Deterministic given (table, spec, config, chain index).
ChainOutput run_chain(const ObservationTable& table, const ModelSpec& spec,
                      const SamplerConfig& config, int chain_index = 0,
                      const Progress& progress = {});

/// Runs config.chains independent chains concurrently; results are ordered
/// by chain index.
std::vector<ChainOutput> run_chains(const ObservationTable& table, const ModelSpec& spec,
                                    const SamplerConfig& config, const Progress& progress = {});

}  // namespace hdbeta
