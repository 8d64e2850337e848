#include "hdbeta/io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <map>

#include "hdbeta/csv.hpp"
#include "hdbeta/error.hpp"

namespace hdbeta {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

void check_schema(const Json& j, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
    throw InputError(std::string(what) + ": unsupported schema_version");
}

std::string kind_name(CovariateKind k) {
  switch (k) {
    case CovariateKind::constant: return "constant";
    case CovariateKind::binary: return "binary";
    case CovariateKind::normal: return "normal";
    case CovariateKind::lognormal_count: return "lognormal_count";
  }
  return "?";
}

CovariateKind kind_from(const std::string& s) {
  if (s == "constant") return CovariateKind::constant;
  if (s == "binary") return CovariateKind::binary;
  if (s == "normal") return CovariateKind::normal;
  if (s == "lognormal_count") return CovariateKind::lognormal_count;
  throw InputError("unknown covariate kind '" + s + "'");
}

Json generators_to_json(const std::vector<CovariateGenerator>& gens) {
  Json arr = Json::array();
  for (const auto& g : gens) {
    arr.push_back({{"name", g.name}, {"kind", kind_name(g.kind)}, {"probability", g.probability},
                   {"value", g.value}, {"log_mean", g.log_mean}, {"log_sd", g.log_sd},
                   {"time_invariant", g.time_invariant}});
  }
  return arr;
}

std::vector<CovariateGenerator> generators_from_json(const Json& arr) {
  std::vector<CovariateGenerator> out;
  if (!arr.is_array()) throw InputError("covariate generators must be a JSON array");
  for (const auto& j : arr) {
    CovariateGenerator g;
    g.name = get_or<std::string>(j, "name", "");
    if (g.name.empty()) throw InputError("covariate generator needs a name");
    g.kind = kind_from(get_or<std::string>(j, "kind", "normal"));
    g.probability = get_or(j, "probability", g.probability);
    g.value = get_or(j, "value", g.value);
    g.log_mean = get_or(j, "log_mean", g.log_mean);
    g.log_sd = get_or(j, "log_sd", g.log_sd);
    g.time_invariant = get_or(j, "time_invariant", g.time_invariant);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

Json to_json(const PriorSpec& p) {
  return {{"variance_shape", p.variance_shape},
          {"default_variance_mean", p.default_variance_mean},
          {"beta_variance_mean", p.beta_variance_mean},
          {"alpha_variance_mean", p.alpha_variance_mean},
          {"delta_variance_mean", p.delta_variance_mean},
          {"gamma_variance_mean", p.gamma_variance_mean},
          {"alpha_initial_mean", p.alpha_initial_mean},
          {"gamma_initial_mean", p.gamma_initial_mean},
          {"initial_variance", p.initial_variance}};
}

PriorSpec prior_from_json(const Json& j) {
  PriorSpec p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw InputError("prior must be a JSON object");
  p.variance_shape = get_or(j, "variance_shape", p.variance_shape);
  p.default_variance_mean = get_or(j, "default_variance_mean", p.default_variance_mean);
  p.beta_variance_mean = get_or(j, "beta_variance_mean", p.beta_variance_mean);
  p.alpha_variance_mean = get_or(j, "alpha_variance_mean", p.alpha_variance_mean);
  p.delta_variance_mean = get_or(j, "delta_variance_mean", p.delta_variance_mean);
  p.gamma_variance_mean = get_or(j, "gamma_variance_mean", p.gamma_variance_mean);
  p.alpha_initial_mean = get_or(j, "alpha_initial_mean", p.alpha_initial_mean);
  p.gamma_initial_mean = get_or(j, "gamma_initial_mean", p.gamma_initial_mean);
  p.initial_variance = get_or(j, "initial_variance", p.initial_variance);
  return p;
}

Json to_json(const ModelSpec& s) {
  return {{"schema_version", kSchemaVersion},
          {"variant", to_string(s.variant)},
          {"family", to_string(s.family)},
          {"mean_covariates", s.design.mean_covariates},
          {"precision_covariates", s.design.precision_covariates},
          {"standardize", s.design.standardize},
          {"p", s.p},
          {"q", s.q},
          {"prior", to_json(s.prior)}};
}

ModelSpec model_spec_from_json(const Json& j) {
  check_schema(j, "model spec");
  ModelSpec s;
  s.variant = parse_variant(get_or<std::string>(j, "variant", "M5"));
  s.family = parse_family(get_or<std::string>(j, "family", "beta"));
  s.design.mean_covariates = get_or(j, "mean_covariates", std::vector<std::string>{});
  s.design.precision_covariates = get_or(j, "precision_covariates", std::vector<std::string>{});
  s.design.standardize = get_or(j, "standardize", std::vector<std::string>{});
  s.p = static_cast<int>(s.design.mean_covariates.size()) + 1;
  s.q = static_cast<int>(s.design.precision_covariates.size()) + 1;
  if (j.contains("prior")) s.prior = prior_from_json(j.at("prior"));
  return s;
}

Json to_json(const SamplerConfig& c) {
  return {{"schema_version", kSchemaVersion}, {"iterations", c.iterations},
          {"burn_in", c.burn_in},            {"thin", c.thin},
          {"seed", c.seed},                  {"chains", c.chains},
          {"adapt_window", c.adapt_window},  {"target_accept", c.target_accept},
          {"warm_start", c.warm_start}};
}

SamplerConfig sampler_config_from_json(const Json& j) {
  check_schema(j, "sampler config");
  SamplerConfig c;
  c.iterations = get_or(j, "iterations", c.iterations);
  c.burn_in = get_or(j, "burn_in", c.burn_in);
  c.thin = get_or(j, "thin", c.thin);
  c.seed = get_or(j, "seed", c.seed);
  c.chains = get_or(j, "chains", c.chains);
  c.adapt_window = get_or(j, "adapt_window", c.adapt_window);
  c.target_accept = get_or(j, "target_accept", c.target_accept);
  c.warm_start = get_or(j, "warm_start", c.warm_start);
  return c;
}

Json to_json(const SimulationScenario& s) {
  return {{"schema_version", kSchemaVersion},
          {"levels", s.levels},
          {"years", s.years},
          {"schools_per_level", s.schools_per_level},
          {"variant", to_string(s.variant)},
          {"family", to_string(s.family)},
          {"mean_covariates", generators_to_json(s.mean_covariates)},
          {"precision_covariates", generators_to_json(s.precision_covariates)},
          {"alpha_start", s.alpha_start},
          {"gamma_start", s.gamma_start},
          {"W_alpha", s.W_alpha},
          {"V_beta", s.V_beta},
          {"W_gamma", s.W_gamma},
          {"V_delta", s.V_delta},
          {"seed", s.seed}};
}

SimulationScenario scenario_from_json(const Json& j) {
  check_schema(j, "scenario");
  SimulationScenario s = SimulationScenario::school_panel(get_or<std::uint64_t>(j, "seed", 1));
  s.levels = get_or(j, "levels", s.levels);
  s.years = get_or(j, "years", s.years);
  s.schools_per_level = get_or(j, "schools_per_level", std::vector<int>(s.levels, 50));
  s.variant = parse_variant(get_or<std::string>(j, "variant", to_string(s.variant)));
  s.family = parse_family(get_or<std::string>(j, "family", to_string(s.family)));
  if (j.contains("mean_covariates")) s.mean_covariates = generators_from_json(j.at("mean_covariates"));
  if (j.contains("precision_covariates"))
    s.precision_covariates = generators_from_json(j.at("precision_covariates"));
  s.alpha_start = get_or(j, "alpha_start", s.alpha_start);
  s.gamma_start = get_or(j, "gamma_start", s.gamma_start);
  s.W_alpha = get_or(j, "W_alpha", s.W_alpha);
  s.V_beta = get_or(j, "V_beta", s.V_beta);
  s.W_gamma = get_or(j, "W_gamma", s.W_gamma);
  s.V_delta = get_or(j, "V_delta", s.V_delta);
  s.validate();
  return s;
}

Json to_json(const ParameterState& state) {
  Json j = Json::object();
  const auto names = state.names();
  const auto values = state.values();
  for (std::size_t k = 0; k < names.size(); ++k) j[names[k]] = values[k];
  return j;
}

Json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_chain_csv(const std::string& path, const std::vector<ChainOutput>& chains) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (chains.empty() || chains.front().draws.empty()) throw InputError("no draws to write");
  std::vector<std::string> header{"chain", "draw", "log_likelihood", "deviance"};
  for (auto& n : chains.front().draws.front().names()) header.push_back(n);
  write_csv_row(out, header);
  for (const auto& c : chains) {
    for (std::size_t l = 0; l < c.draws.size(); ++l) {
      std::vector<std::string> row{std::to_string(c.chain + 1), std::to_string(l + 1),
                                   format_double(c.log_likelihoods[l]), format_double(c.deviances[l])};
      for (double v : c.draws[l].values()) row.push_back(format_double(v));
      write_csv_row(out, row);
    }
  }
}

std::vector<ChainOutput> read_chain_csv(const std::string& path, int levels, int years,
                                        const ModelSpec& spec) {
  const CsvTable csv = read_csv(path);
  const ParameterState shape = ParameterState::initial(levels, years, spec);
  const auto names = shape.names();
  if (csv.header.size() != names.size() + 4)
    throw InputError(path + ": column count does not match the model");
  for (std::size_t k = 0; k < names.size(); ++k)
    if (csv.header[k + 4] != names[k])
      throw InputError(path + ": unexpected column '" + csv.header[k + 4] + "'");

  std::map<long long, ChainOutput> by_chain;
  std::vector<double> values(names.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string where = path + " row " + std::to_string(r + 2);
    const long long chain = parse_integer(row[0], where);
    auto& out = by_chain[chain];
    out.chain = static_cast<int>(chain - 1);
    out.log_likelihoods.push_back(parse_double(row[2], where));
    out.deviances.push_back(parse_double(row[3], where));
    for (std::size_t k = 0; k < names.size(); ++k) {
      values[k] = parse_double(row[k + 4], where);
      if (!std::isfinite(values[k])) throw InputError(where + ": non-finite value for " + names[k]);
    }
    ParameterState s = shape;
    s.assign(values);
    out.draws.push_back(std::move(s));
  }
  std::vector<ChainOutput> chains;
  for (auto& [id, c] : by_chain) {
    c.prior = spec.prior;
    chains.push_back(std::move(c));
  }
  return chains;
}

}  // namespace hdbeta
