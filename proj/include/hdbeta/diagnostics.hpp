#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hdbeta/mcmc.hpp"

namespace hdbeta {

/// Effective sample size from Geyer's initial positive sequence estimator.
/// Empty for a constant chain.
std::optional<double> effective_sample_size(std::span<const double> chain);

/// Geweke z-score comparing the first `first` and last `last` fractions,
/// each segment's variance of the mean taken as s^2 / ESS. Empty when either
/// segment is constant.
std::optional<double> geweke_z(std::span<const double> chain, double first = 0.1,
                               double last = 0.5);

/// Gelman-Rubin potential scale reduction factor over equal-length chains.
/// Empty for fewer than two chains or zero within-chain variance.
std::optional<double> potential_scale_reduction(const std::vector<std::span<const double>>& chains);

struct ParameterDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<double> ess;     // summed over chains
  std::optional<double> geweke;  // first chain
  std::optional<double> psrf;
};

/// Diagnostics for every scalar parameter; throws InputError if chains hold
/// fewer than 10 draws or disagree in length.
std::vector<ParameterDiagnostics> diagnose(const std::vector<ChainOutput>& chains);

}  // namespace hdbeta
