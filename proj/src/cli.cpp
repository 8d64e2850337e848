#include "hdbeta/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

#include "hdbeta/csv.hpp"
#include "hdbeta/diagnostics.hpp"
#include "hdbeta/error.hpp"
#include "hdbeta/io.hpp"
#include "hdbeta/model_selection.hpp"
#include "hdbeta/sampling_design.hpp"
#include "hdbeta/simulate.hpp"
#include "hdbeta/standardize.hpp"

namespace fs = std::filesystem;

namespace hdbeta {

namespace {

using Clock = std::chrono::steady_clock;

struct Common {
  std::string out_dir;
  bool force = false;
};

Json input_entry(const std::string& path) {
  if (!fs::exists(path)) throw InputError("input file not found: " + path);
  return {{"path", fs::absolute(path).lexically_normal().string()}, {"digest", file_digest(path)}};
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw InputError("input file not found: " + path);
}

fs::path prepare_output(const Common& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  if (fs::exists(dir / "manifest.json") && !c.force)
    throw InputError((dir / "manifest.json").string() + " exists; pass --force to overwrite");
  return dir;
}

Json manifest_base(const std::string& subcommand) {
  return {{"schema_version", kSchemaVersion}, {"subcommand", subcommand}, {"version", kVersion}};
}

void finish_manifest(Json& m, const fs::path& dir, Clock::time_point start,
                     const std::vector<std::string>& outputs) {
  Json outs = Json::object();
  for (const auto& name : outputs) outs[name] = file_digest((dir / name).string());
  m["outputs"] = outs;
  m["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_json_file((dir / "manifest.json").string(), m);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bool truthy(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n" || v.empty()) return false;
  throw InputError("cannot read '" + s + "' as a flag");
}

std::string opt_string(const Json& j, const char* key, const std::string& fallback) {
  return j.contains(key) && j.at(key).is_string() ? j.at(key).get<std::string>() : fallback;
}

// ---------------------------------------------------------------- standardize

struct StandardizeArgs {
  Common common;
  std::string input;
  std::string score_column = "score";
  std::string response_column = "y";
  double max_score = 120.0;
};

int run_standardize(const StandardizeArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  require_file(a.input);
  const CsvTable csv = read_csv(a.input);
  const std::size_t c_level = csv.require_column("level");
  const std::size_t c_school = csv.require_column("school_id");
  const std::size_t c_year = csv.require_column("year");
  const std::size_t c_score = csv.require_column(a.score_column);
  if (csv.column(a.response_column))
    throw InputError(a.input + ": already has a '" + a.response_column + "' column");

  std::map<std::string, int> levels, years;
  std::vector<std::string> level_names, year_names;
  std::vector<std::map<std::string, int>> schools;
  auto slot = [](std::map<std::string, int>& m, std::vector<std::string>* names, const std::string& key) {
    auto [it, added] = m.emplace(key, static_cast<int>(m.size()));
    if (added && names) names->push_back(key);
    return it->second;
  };

  RawScoreTable raw;
  raw.max_score = a.max_score;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    RawScore rec;
    rec.index.level = slot(levels, &level_names, row[c_level]);
    if (schools.size() < levels.size()) schools.resize(levels.size());
    rec.index.school = slot(schools[rec.index.level], nullptr, row[c_school]);
    rec.index.year = slot(years, &year_names, row[c_year]);
    rec.score = parse_double(row[c_score], a.input + " row " + std::to_string(r + 2));
    raw.records.push_back(rec);
  }
  const StandardizedScores result = standardize_scores(raw);

  const fs::path dir = prepare_output(a.common);
  {
    std::ofstream f(dir / "responses.csv");
    std::vector<std::string> header{"level", "school_id", "year", a.response_column};
    std::vector<std::size_t> passthrough;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
      if (c == c_level || c == c_school || c == c_year || c == c_score) continue;
      header.push_back(csv.header[c]);
      passthrough.push_back(c);
    }
    write_csv_row(f, header);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      std::vector<std::string> cells{row[c_level], row[c_school], row[c_year],
                                     format_double(result.responses[r])};
      for (auto c : passthrough) cells.push_back(row[c]);
      write_csv_row(f, cells);
    }
  }
  Json summary = {{"schema_version", kSchemaVersion}, {"max_score", a.max_score}};
  Json groups = Json::array();
  for (const auto& g : result.summary.groups)
    groups.push_back({{"level", level_names[g.level]}, {"year", year_names[g.year]}, {"size", g.size},
                      {"mean", g.mean}, {"sd", g.sd}, {"lo", g.lo}, {"hi", g.hi}, {"nudged", g.nudged}});
  summary["groups"] = groups;
  write_json_file((dir / "summary.json").string(), summary);

  Json m = manifest_base("standardize");
  m["inputs"] = {{"raw", input_entry(a.input)}};
  m["config"] = {{"score_column", a.score_column}, {"response_column", a.response_column},
                 {"max_score", a.max_score}};
  finish_manifest(m, dir, start, {"responses.csv", "summary.json"});
  out << "standardized " << raw.records.size() << " records in " << result.summary.groups.size()
      << " groups\n";
  return 0;
}

// ---------------------------------------------------------------- stratify

struct StratifyArgs {
  Common common;
  std::string input;
  std::string id_column = "id";
  std::string variable;
  std::string certainty_column;
  std::vector<std::string> by;
  int strata = 5;
  double fraction = 0.2;
  std::uint64_t seed = 1;
  std::string participation;
  std::vector<std::string> years;
};

int run_stratify(const StratifyArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  require_file(a.input);
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw InputError("--fraction must lie in (0, 1]");
  if (a.strata < 2) throw InputError("--strata must be at least 2");
  if (!a.years.empty() && a.participation.empty())
    throw InputError("--years needs a --participation file");
  const CsvTable csv = read_csv(a.input);
  const std::size_t c_id = csv.require_column(a.id_column);
  const std::size_t c_var = csv.require_column(a.variable);
  std::optional<std::size_t> c_cert;
  if (!a.certainty_column.empty()) c_cert = csv.require_column(a.certainty_column);
  std::vector<std::size_t> c_by;
  for (const auto& b : a.by) c_by.push_back(csv.require_column(b));

  std::vector<double> values;
  std::vector<bool> certain(csv.rows.size(), false);
  std::set<std::string> ids;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (!ids.insert(row[c_id]).second) throw InputError("duplicate unit id '" + row[c_id] + "'");
    if (c_cert) certain[r] = truthy(row[*c_cert]);
    if (!certain[r]) values.push_back(parse_double(row[c_var], a.input + " row " + std::to_string(r + 2)));
  }
  if (csv.rows.empty()) throw InputError(a.input + ": empty population");

  std::vector<double> start_bounds, bounds;
  if (!values.empty()) {
    start_bounds = cum_sqrt_f_boundaries(values, a.strata);
    bounds = dalenius_hodges_boundaries(values, a.strata);
  }

  std::vector<PopulationUnit> population;
  std::size_t v = 0;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    PopulationUnit u;
    u.id = row[c_id];
    u.certainty = certain[r];
    if (u.certainty) {
      u.stratum = "certainty";
    } else {
      for (auto c : c_by) u.stratum += row[c] + "|";
      u.stratum += "band" + std::to_string(stratum_of(values[v++], bounds) + 1);
    }
    population.push_back(std::move(u));
  }
  std::vector<PopulationUnit> sample = stratified_sample(population, a.fraction, a.seed);

  Json inputs = {{"population", input_entry(a.input)}};
  if (!a.participation.empty()) {
    require_file(a.participation);
    const CsvTable part = read_csv(a.participation);
    const std::size_t p_id = part.require_column(a.id_column);
    const std::size_t p_year = part.require_column("year");
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& row : part.rows) seen[row[p_id]].insert(row[p_year]);
    sample = retain_panel(sample, seen, a.years);
    inputs["participation"] = input_entry(a.participation);
  }

  const fs::path dir = prepare_output(a.common);
  {
    std::ofstream f(dir / "sample.csv");
    write_csv_row(f, {a.id_column, "stratum", "certainty"});
    for (const auto& u : sample) write_csv_row(f, {u.id, u.stratum, u.certainty ? "1" : "0"});
  }
  Json report = {{"schema_version", kSchemaVersion}, {"variable", a.variable}};
  if (!values.empty()) {
    const StrataDefinition def = describe_strata(values, bounds);
    report["boundaries"] = bounds;
    report["objective"] = def.objective();
    report["start_boundaries"] = start_bounds;
    report["start_objective"] = stratification_objective(values, start_bounds);
    Json bands = Json::array();
    for (std::size_t h = 0; h < def.sizes.size(); ++h)
      bands.push_back({{"band", h + 1}, {"N_h", def.sizes[h]}, {"W_h", def.weights[h]},
                       {"S2_h", def.variances[h]}});
    report["bands"] = bands;
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& u : population) ++counts[u.stratum].first;
  for (const auto& u : sample) ++counts[u.stratum].second;
  Json strata = Json::array();
  for (const auto& [label, c] : counts)
    strata.push_back({{"stratum", label}, {"population", c.first}, {"selected", c.second}});
  report["strata"] = strata;
  report["selected"] = sample.size();
  write_json_file((dir / "strata.json").string(), report);

  Json m = manifest_base("stratify");
  m["seed"] = a.seed;
  m["inputs"] = inputs;
  m["config"] = {{"id_column", a.id_column}, {"variable", a.variable},
                 {"certainty_column", a.certainty_column}, {"by", a.by},
                 {"strata", a.strata}, {"fraction", a.fraction}, {"years", a.years}};
  finish_manifest(m, dir, start, {"sample.csv", "strata.json"});
  out << "selected " << sample.size() << " of " << population.size() << " units\n";
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  SimulationScenario sc = SimulationScenario::school_panel();
  Json inputs = Json::object();
  if (!a.scenario.empty()) {
    require_file(a.scenario);
    sc = scenario_from_json(read_json_file(a.scenario));
    inputs["scenario"] = input_entry(a.scenario);
  }
  if (a.seed) sc.seed = *a.seed;
  if (a.variant) sc.variant = parse_variant(*a.variant);
  sc.validate();
  const Simulation sim = simulate_panel(sc);

  const fs::path dir = prepare_output(a.common);
  write_panel_csv((dir / "panel.csv").string(), sim.table);
  Json truth = {{"schema_version", kSchemaVersion},
                {"variant", to_string(sc.variant)},
                {"family", to_string(sc.family)},
                {"levels", sc.levels},
                {"years", sc.years},
                {"parameters", to_json(sim.truth)}};
  write_json_file((dir / "truth.json").string(), truth);
  ModelSpec spec = model_spec_for(sc);
  write_json_file((dir / "spec.json").string(), to_json(spec));

  Json m = manifest_base("simulate");
  m["seed"] = sc.seed;
  m["inputs"] = inputs;
  m["config"] = to_json(sc);
  finish_manifest(m, dir, start, {"panel.csv", "truth.json", "spec.json"});
  out << "simulated " << sim.table.size() << " observations (" << to_string(sc.variant) << ")\n";
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  std::string data;
  std::string spec;
  std::string sampler;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<std::string> label;
};

struct LoadedData {
  ModelSpec spec;
  std::string response_column = "y";
  ObservationTable table;
};

ObservationTable load_table(const std::string& path, const std::string& response_column,
                            const DesignSpec& design) {
  require_file(path);
  return build_table(read_panel_csv(path, response_column), design);
}

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err, bool quiet) {
  const auto start = Clock::now();
  require_file(a.data);
  require_file(a.spec);
  Json spec_json = read_json_file(a.spec);
  ModelSpec spec = model_spec_from_json(spec_json);
  const std::string response_column = opt_string(spec_json, "response_column", "y");
  SamplerConfig config;
  Json inputs = {{"data", input_entry(a.data)}, {"spec", input_entry(a.spec)}};
  if (!a.sampler.empty()) {
    require_file(a.sampler);
    config = sampler_config_from_json(read_json_file(a.sampler));
    inputs["sampler"] = input_entry(a.sampler);
  } else if (spec_json.contains("seed")) {
    config.seed = spec_json.at("seed").get<std::uint64_t>();
  }
  if (a.model) spec.variant = parse_variant(*a.model);
  if (a.seed) config.seed = *a.seed;
  if (a.chains) config.chains = *a.chains;
  if (spec.variant == PrecisionVariant::M1 && spec.q > 1) {
    spec.design.precision_covariates.clear();
    spec.q = 1;
  }
  spec.prior.validate();
  config.validate();
  spec.validate();

  const ObservationTable table = load_table(a.data, response_column, spec.design);
  std::mutex lock;
  Progress progress;
  if (!quiet) {
    progress = [&](int chain, int iteration) {
      std::lock_guard<std::mutex> g(lock);
      err << "[fit] chain " << chain + 1 << " iteration " << iteration << "/" << config.iterations
          << std::endl;
    };
  }
  const std::vector<ChainOutput> chains = run_chains(table, spec, config, progress);

  const fs::path dir = prepare_output(a.common);
  write_chain_csv((dir / "chains.csv").string(), chains);

  ModelSpec used = spec;
  used.prior = chains.front().prior;
  Json spec_out = to_json(used);
  spec_out["response_column"] = response_column;

  Json tuning = Json::array();
  for (const auto& c : chains) {
    Json blocks = Json::array();
    for (const auto& b : c.blocks)
      blocks.push_back({{"block", b.name}, {"acceptance_rate", b.acceptance_rate}, {"scale", b.scale}});
    tuning.push_back({{"chain", c.chain + 1}, {"blocks", blocks}});
  }

  Json m = manifest_base("fit");
  m["model"] = a.label ? *a.label : to_string(spec.variant);
  m["seed"] = config.seed;
  m["inputs"] = inputs;
  m["model_spec"] = spec_out;
  m["sampler"] = to_json(config);
  m["stored_draws"] = config.stored_draws();
  m["levels"] = table.levels();
  m["years"] = table.years();
  m["tuning"] = tuning;
  finish_manifest(m, dir, start, {"chains.csv"});
  out << "fit " << to_string(spec.variant) << ": " << chains.size() << " chain(s) x "
      << config.stored_draws() << " draws -> " << (dir / "chains.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- runs

struct Run {
  Json manifest;
  std::string label;
  ModelSpec spec;
  ObservationTable table;
  std::vector<ChainOutput> chains;
  Json inputs;
};

Run load_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::is_regular_file(manifest_path))
    throw InputError("input file not found: " + manifest_path.string());
  Run run;
  run.manifest = read_json_file(manifest_path.string());
  if (opt_string(run.manifest, "subcommand", "") != "fit")
    throw InputError(manifest_path.string() + " is not a fit manifest");
  run.label = opt_string(run.manifest, "model", "model");
  const Json& spec_json = run.manifest.at("model_spec");
  run.spec = model_spec_from_json(spec_json);
  const auto& data = run.manifest.at("inputs").at("data");
  const std::string data_path = data.at("path").get<std::string>();
  require_file(data_path);
  if (file_digest(data_path) != data.at("digest").get<std::string>())
    throw InputError(data_path + " changed since the fit in " + run_dir);
  run.table = load_table(data_path, opt_string(spec_json, "response_column", "y"), run.spec.design);
  const std::string chain_path = (dir / "chains.csv").string();
  require_file(chain_path);
  run.chains = read_chain_csv(chain_path, run.table.levels(), run.table.years(), run.spec);
  for (auto& c : run.chains) c.prior = run.spec.prior;
  run.inputs = {{"manifest", input_entry(manifest_path.string())}, {"chains", input_entry(chain_path)}};
  return run;
}

struct CompareArgs {
  Common common;
  std::vector<std::string> runs;
  int reps = 1;
  std::uint64_t seed = 1;
};

int run_compare(const CompareArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  if (a.reps < 1) throw InputError("--reps must be at least 1");
  std::vector<ScoreReport> reports;
  Json inputs = Json::object();
  for (const auto& r : a.runs) {
    Run run = load_run(r);
    inputs[r] = run.inputs;
    for (auto& rep : score_model(run.chains, run.table, run.spec, run.label, a.seed, a.reps))
      reports.push_back(std::move(rep));
  }
  const fs::path dir = prepare_output(a.common);
  const std::string text = comparison_text(reports);
  write_text(dir / "comparison.csv", comparison_csv(reports));
  write_text(dir / "comparison.txt", text);
  Json m = manifest_base("compare");
  m["seed"] = a.seed;
  m["inputs"] = inputs;
  m["config"] = {{"reps_per_draw", a.reps}, {"runs", a.runs},
                 {"theta_bar", "location parameters averaged directly, variances on the log scale"}};
  finish_manifest(m, dir, start, {"comparison.csv", "comparison.txt"});
  out << text;
  return 0;
}

struct PredictArgs {
  Common common;
  std::string run;
  int reps = 20;
  std::uint64_t seed = 1;
};

int run_predict(const PredictArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  if (a.reps < 1) throw InputError("--reps must be at least 1");
  Run run = load_run(a.run);
  const ReplicateStore store = replicate(run.chains, run.table, run.spec, a.reps, a.seed);
  const auto records = predictive_summary(store, run.table.responses());
  const fs::path dir = prepare_output(a.common);
  std::size_t outside = 0;
  {
    std::ofstream f(dir / "predictive.csv");
    write_csv_row(f, {"level", "school_id", "year", "observed", "mean", "lower", "upper", "outside"});
    const auto& labels = run.table.labels();
    for (const auto& r : records) {
      const PanelIndex idx = run.table.index(r.observation);
      outside += r.outside;
      write_csv_row(f, {labels.levels[idx.level], labels.schools[idx.level][idx.school],
                        labels.years[idx.year], format_double(r.observed), format_double(r.mean),
                        format_double(r.lower), format_double(r.upper), r.outside ? "1" : "0"});
    }
  }
  Json m = manifest_base("predict");
  m["seed"] = a.seed;
  m["inputs"] = run.inputs;
  m["config"] = {{"reps_per_draw", a.reps}, {"run", a.run}, {"interval", {0.025, 0.975}}};
  finish_manifest(m, dir, start, {"predictive.csv"});
  out << outside << " of " << records.size() << " observations outside the 95% predictive interval\n";
  return 0;
}

struct DiagnoseArgs {
  Common common;
  std::string run;
};

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

int run_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  Run run = load_run(a.run);
  const auto diags = diagnose(run.chains);
  const fs::path dir = prepare_output(a.common);
  double worst_psrf = 0.0, worst_geweke = 0.0;
  {
    std::ofstream f(dir / "diagnostics.csv");
    write_csv_row(f, {"parameter", "mean", "sd", "ess", "geweke_z", "psrf"});
    for (const auto& d : diags) {
      if (d.psrf) worst_psrf = std::max(worst_psrf, *d.psrf);
      if (d.geweke) worst_geweke = std::max(worst_geweke, std::abs(*d.geweke));
      write_csv_row(f, {d.name, format_double(d.mean), format_double(d.sd), optional_cell(d.ess),
                        optional_cell(d.geweke), optional_cell(d.psrf)});
    }
  }
  Json m = manifest_base("diagnose");
  m["inputs"] = run.inputs;
  m["config"] = {{"run", a.run}};
  finish_manifest(m, dir, start, {"diagnostics.csv"});
  out << diags.size() << " parameters; max |Geweke z| " << worst_geweke;
  if (run.chains.size() > 1) out << "; max PSRF " << worst_psrf;
  out << "\n";
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output directory")->required();
  sub->add_flag("--force", c.force, "Overwrite an existing manifest");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical dynamic beta regression for panel data", "hdbeta"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");
  app.set_version_flag("--version", kVersion);

  StandardizeArgs st;
  auto* s_std = app.add_subcommand("standardize", "Map raw average scores onto (0,1) responses");
  s_std->add_option("--input", st.input, "Raw-score CSV (level, school_id, year, score)")->required();
  s_std->add_option("--score-column", st.score_column);
  s_std->add_option("--response-column", st.response_column);
  s_std->add_option("--max-score", st.max_score)->check(CLI::PositiveNumber);
  add_common(s_std, st.common);

  StratifyArgs sf;
  auto* s_str = app.add_subcommand("stratify", "Dalenius-Hodges strata and a stratified sample");
  s_str->add_option("--input", sf.input, "Population CSV")->required();
  s_str->add_option("--variable", sf.variable, "Continuous stratification variable")->required();
  s_str->add_option("--id-column", sf.id_column);
  s_str->add_option("--certainty-column", sf.certainty_column);
  s_str->add_option("--by", sf.by, "Categorical columns crossed with the bands")->delimiter(',');
  s_str->add_option("--strata", sf.strata, "Number of bands");
  s_str->add_option("--fraction", sf.fraction, "Sampling fraction in (0,1]");
  s_str->add_option("--seed", sf.seed);
  s_str->add_option("--participation", sf.participation, "CSV of (id, year) participation");
  s_str->add_option("--years", sf.years, "Years every retained unit must cover")->delimiter(',');
  add_common(s_str, sf.common);

  SimulateArgs sm;
  auto* s_sim = app.add_subcommand("simulate", "Simulate a panel from the generative model");
  s_sim->add_option("--scenario", sm.scenario, "Scenario JSON");
  s_sim->add_option("--seed", sm.seed);
  s_sim->add_option("--model", sm.variant, "Precision variant M1..M5");
  add_common(s_sim, sm.common);

  FitArgs ft;
  auto* s_fit = app.add_subcommand("fit", "Run the MCMC sampler");
  s_fit->add_option("--data", ft.data, "Panel CSV")->required();
  s_fit->add_option("--spec", ft.spec, "Model spec JSON")->required();
  s_fit->add_option("--sampler", ft.sampler, "Sampler config JSON");
  s_fit->add_option("--model", ft.model, "Override the precision variant");
  s_fit->add_option("--seed", ft.seed);
  s_fit->add_option("--chains", ft.chains);
  s_fit->add_option("--label", ft.label, "Model label used by compare");
  add_common(s_fit, ft.common);

  CompareArgs cp;
  auto* s_cmp = app.add_subcommand("compare", "DIC, RPS and LogS for fitted runs");
  s_cmp->add_option("runs", cp.runs, "Fit output directories")->required();
  s_cmp->add_option("--reps", cp.reps, "Replicates per stored draw and stream");
  s_cmp->add_option("--seed", cp.seed);
  add_common(s_cmp, cp.common);

  PredictArgs pr;
  auto* s_pred = app.add_subcommand("predict", "Posterior predictive summary per observation");
  s_pred->add_option("run", pr.run, "Fit output directory")->required();
  s_pred->add_option("--reps", pr.reps, "Replicates per stored draw and stream");
  s_pred->add_option("--seed", pr.seed);
  add_common(s_pred, pr.common);

  DiagnoseArgs dg;
  auto* s_diag = app.add_subcommand("diagnose", "Convergence diagnostics for a fitted run");
  s_diag->add_option("run", dg.run, "Fit output directory")->required();
  add_common(s_diag, dg.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (s_std->parsed()) return run_standardize(st, out);
    if (s_str->parsed()) return run_stratify(sf, out);
    if (s_sim->parsed()) return run_simulate(sm, out);
    if (s_fit->parsed()) return run_fit(ft, out, err, quiet);
    if (s_cmp->parsed()) return run_compare(cp, out);
    if (s_pred->parsed()) return run_predict(pr, out);
    if (s_diag->parsed()) return run_diagnose(dg, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON field: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace hdbeta
