#pragma once

// JSON forms of the configuration types and the flat chain CSV.
// Every JSON document carries "schema_version".

#include <json.hpp>
#include <string>
#include <vector>

#include "hdbeta/mcmc.hpp"
#include "hdbeta/simulate.hpp"

namespace hdbeta {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

Json to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const Json& j);

/// {"variant", "family", "mean_covariates", "precision_covariates",
///  "standardize", "response_column", "prior"}; p and q follow from the
/// covariate lists.
Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);

Json to_json(const SamplerConfig& config);
SamplerConfig sampler_config_from_json(const Json& j);

Json to_json(const SimulationScenario& scenario);
SimulationScenario scenario_from_json(const Json& j);

/// Named parameter values, in canonical order.
Json to_json(const ParameterState& state);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// One row per stored draw: chain, draw, log_likelihood, deviance, then one
/// column per scalar parameter.
void write_chain_csv(const std::string& path, const std::vector<ChainOutput>& chains);

/// Inverse of write_chain_csv; `levels` and `years` fix the state shape.
std::vector<ChainOutput> read_chain_csv(const std::string& path, int levels, int years,
                                        const ModelSpec& spec);

}  // namespace hdbeta
