#pragma once

// Model comparison: DIC from the stored deviances, and the RPS / LogS proper
// scoring rules from the posterior predictive distribution, all computed
// in-sample.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hdbeta/mcmc.hpp"

namespace hdbeta {

struct DicResult {
  double d_bar = 0.0;
  double d_at_mean = 0.0;
  double p_d = 0.0;
  double dic = 0.0;
};

/// p_D = D_bar - D(theta_bar), DIC = D_bar + p_D.
DicResult dic_from(std::span<const double> deviances, double d_at_mean);

/// Componentwise posterior mean over all chains. Variances are averaged on
/// the log scale and exponentiated.
ParameterState posterior_mean(const std::vector<ChainOutput>& chains);

DicResult dic(const std::vector<ChainOutput>& chains, const ObservationTable& table,
              const ModelSpec& spec, DensityScale scale = DensityScale::native);

/// Two independent replicate streams per observation, `per_observation`
/// values each, stored observation-major.
struct ReplicateStore {
  std::size_t observations = 0;
  std::size_t per_observation = 0;
  std::vector<double> primary;
  std::vector<double> secondary;

  std::span<const double> primary_of(std::size_t k) const {
    return {primary.data() + k * per_observation, per_observation};
  }
  std::span<const double> secondary_of(std::size_t k) const {
    return {secondary.data() + k * per_observation, per_observation};
  }
};

/// Draws `reps_per_draw` values per stored draw into each stream. Each
/// observation has its own seed-derived stream, so results do not depend on
/// evaluation order. Normal-logit replicates are drawn on the logit scale
/// and, on DensityScale::response, mapped back through the logistic.
ReplicateStore replicate(const std::vector<ChainOutput>& chains, const ObservationTable& table,
                         const ModelSpec& spec, int reps_per_draw, std::uint64_t seed,
                         DensityScale scale = DensityScale::response);

struct RpsEstimate {
  double value = 0.0;
  double standard_error = 0.0;  // Monte Carlo, over replicate pairs
};

/// Mean over observations of E|Y - y| - E|Y - Y'| / 2, with Y from the
/// primary stream and Y' from the paired secondary stream.
RpsEstimate rps(const ReplicateStore& replicates, std::span<const double> observed);

/// log((1/L) sum_l exp(v_l)) computed with log-sum-exp.
double log_mean_exp(std::span<const double> log_values);

/// Mean over observations of -log p(y), p the mixture of the per-draw
/// predictive densities.
double logs(const std::vector<ChainOutput>& chains, const ObservationTable& table,
            const ModelSpec& spec, DensityScale scale = DensityScale::native);

struct PredictiveRecord {
  std::size_t observation = 0;
  double observed = 0.0;
  double mean = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
  bool outside = false;
};

/// Both streams pooled; quantiles by linear interpolation of order
/// statistics. Requires at least 40 replicates per observation.
std::vector<PredictiveRecord> predictive_summary(const ReplicateStore& replicates,
                                                 std::span<const double> observed);

/// Linear-interpolation (type 7) sample quantile of sorted data.
double sorted_quantile(std::span<const double> sorted, double prob);

struct ScoreReport {
  std::string model_label;
  double d_bar = 0.0;
  double d_at_mean = 0.0;
  double p_d = 0.0;
  double dic = 0.0;
  double rps = 0.0;
  double rps_se = 0.0;
  double logs = 0.0;
};

/// One report for the beta family; for normal_logit, the native (logit)
/// scale report and the response-scale report, labelled accordingly.
std::vector<ScoreReport> score_model(const std::vector<ChainOutput>& chains,
                                     const ObservationTable& table, const ModelSpec& spec,
                                     const std::string& label, std::uint64_t seed,
                                     int reps_per_draw = 1);

/// Comparison table with columns Model, D_bar, p_D, DIC, RPS, LogS and a
/// marker on the best (smallest) value of DIC, RPS and LogS.
std::string comparison_text(const std::vector<ScoreReport>& reports);
std::string comparison_csv(const std::vector<ScoreReport>& reports);

}  // namespace hdbeta
