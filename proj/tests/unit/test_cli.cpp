#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hdbeta/cli.hpp"
#include "hdbeta/csv.hpp"
#include "hdbeta/io.hpp"
#include "hdbeta/simulate.hpp"

using namespace hdbeta;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

// Small simulated panel with its spec and a short sampler config.
fs::path setup(const std::string& name) {
  auto dir = fixture::scratch_dir(name);
  write(dir / "scenario.json",
        R"({"schema_version": 1, "levels": 2, "years": 3, "schools_per_level": [12, 12], "seed": 5})");
  write(dir / "sampler.json",
        R"({"schema_version": 1, "iterations": 400, "burn_in": 100, "thin": 3, "seed": 11, "chains": 2})");
  REQUIRE(run({"simulate", "--scenario", (dir / "scenario.json").string(), "--out", (dir / "sim").string()}).code == 0);
  return dir;
}

}  // namespace

TEST_CASE("json round trips") {
  ModelSpec spec;
  spec.variant = PrecisionVariant::M3;
  spec.family = Family::normal_logit;
  spec.design = {{"ADM", "HDI"}, {"nstudent"}, {"HDI"}};
  spec.p = 3;
  spec.q = 2;
  spec.prior.beta_variance_mean = {0.2, 0.3, 0.4};
  spec.prior.initial_variance = 50.0;
  auto j = to_json(spec);
  CHECK(j.at("schema_version") == kSchemaVersion);
  auto back = model_spec_from_json(Json::parse(j.dump()));
  CHECK(back.variant == spec.variant);
  CHECK(back.family == spec.family);
  CHECK(back.p == 3);
  CHECK(back.q == 2);
  CHECK(back.design.standardize == spec.design.standardize);
  CHECK(back.prior.beta_variance_mean == spec.prior.beta_variance_mean);
  CHECK(back.prior.initial_variance == 50.0);

  SamplerConfig cfg;
  cfg.iterations = 1234;
  cfg.chains = 3;
  auto c2 = sampler_config_from_json(Json::parse(to_json(cfg).dump()));
  CHECK(c2.iterations == 1234);
  CHECK(c2.chains == 3);
  CHECK(c2.thin == cfg.thin);

  auto sc = SimulationScenario::school_panel(77);
  sc.variant = PrecisionVariant::M4;
  auto sc2 = scenario_from_json(Json::parse(to_json(sc).dump()));
  CHECK(sc2.seed == 77);
  CHECK(sc2.variant == PrecisionVariant::M4);
  CHECK(sc2.mean_covariates.size() == sc.mean_covariates.size());
  CHECK(sc2.mean_covariates[1].kind == sc.mean_covariates[1].kind);
  CHECK(simulate_panel(sc2).truth.values() == simulate_panel(sc).truth.values());

  CHECK_THROWS(model_spec_from_json(Json::parse(R"({"schema_version": 99})")));
  CHECK_THROWS(model_spec_from_json(Json::parse(R"({"variant": "M9"})")));
}

TEST_CASE("chain csv round trip is exact") {
  auto dir = fixture::scratch_dir("chain_csv");
  auto spec = fixture::spec_for(PrecisionVariant::M5, 2, 2);
  std::vector<ChainOutput> chains(2);
  for (int c = 0; c < 2; ++c) {
    chains[c].chain = c;
    for (int l = 0; l < 4; ++l) {
      chains[c].draws.push_back(fixture::random_state(2, 3, spec, 10 * c + l));
      chains[c].log_likelihoods.push_back(0.1 * l + c / 3.0);
      chains[c].deviances.push_back(-0.2 * l - 2 * c / 3.0);
    }
  }
  const auto path = (dir / "chains.csv").string();
  write_chain_csv(path, chains);
  auto back = read_chain_csv(path, 2, 3, spec);
  REQUIRE(back.size() == 2);
  for (int c = 0; c < 2; ++c) {
    CHECK(back[c].chain == c);
    CHECK(back[c].log_likelihoods == chains[c].log_likelihoods);
    CHECK(back[c].deviances == chains[c].deviances);
    for (int l = 0; l < 4; ++l) CHECK(back[c].draws[l].values() == chains[c].draws[l].values());
  }
  auto header = read_csv(path).header;
  CHECK(header[0] == "chain");
  CHECK(std::find(header.begin(), header.end(), "beta[i=2,t=3,m=2]") != header.end());
  CHECK_THROWS(read_chain_csv(path, 2, 3, fixture::spec_for(PrecisionVariant::M4, 2, 2)));
}

TEST_CASE("usage errors exit 1 with usage text") {
  auto r = run({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = run({"fit", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("missing input file names the path") {
  auto dir = fixture::scratch_dir("missing");
  auto r = run({"fit", "--data", (dir / "panel.csv").string(), "--spec", (dir / "spec.json").string(),
                "--out", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find((dir / "panel.csv").string()) != std::string::npos);
}

TEST_CASE("fit, compare, predict and diagnose") {
  auto dir = setup("pipeline");
  const auto sim = dir / "sim";
  for (const char* f : {"panel.csv", "truth.json", "spec.json", "manifest.json"}) CHECK(fs::exists(sim / f));
  auto truth = read_json_file((sim / "truth.json").string());
  CHECK(truth.at("schema_version") == kSchemaVersion);
  CHECK(truth.at("parameters").contains("alpha[t=1,m=1]"));

  auto fit = [&](const std::string& model) {
    return run({"fit", "--model", model, "--data", (sim / "panel.csv").string(), "--spec",
                (sim / "spec.json").string(), "--sampler", (dir / "sampler.json").string(), "--out",
                (dir / model).string()});
  };
  auto r5 = fit("M5");
  REQUIRE(r5.code == 0);
  CHECK(r5.err.find("[fit]") == std::string::npos);  // fewer than 1000 iterations
  REQUIRE(fit("M1").code == 0);
  CHECK(fs::exists(dir / "M5" / "chains.csv"));
  auto manifest = read_json_file((dir / "M5" / "manifest.json").string());
  CHECK(manifest.at("version") == kVersion);
  CHECK(manifest.at("seed") == 11);
  CHECK(manifest.at("stored_draws") == 100);
  CHECK(manifest.at("inputs").at("data").contains("digest"));
  CHECK(manifest.at("tuning").size() == 2);
  CHECK(manifest.contains("wall_time_seconds"));
  auto m1 = read_json_file((dir / "M1" / "manifest.json").string());
  CHECK(m1.at("model_spec").at("q") == 1);

  // Existing manifest is protected.
  auto again = fit("M5");
  CHECK(again.code == 1);
  CHECK(again.err.find("--force") != std::string::npos);

  auto cmp = run({"compare", (dir / "M1").string(), (dir / "M5").string(), "--out", (dir / "cmp").string()});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("DIC") != std::string::npos);
  auto table = read_csv((dir / "cmp" / "comparison.csv").string());
  CHECK(table.rows.size() == 2);
  CHECK(table.rows[0][0] == "M1");
  CHECK(table.rows[1][0] == "M5");

  auto pred = run({"predict", (dir / "M5").string(), "--out", (dir / "pred").string()});
  REQUIRE(pred.code == 0);
  auto pcsv = read_csv((dir / "pred" / "predictive.csv").string());
  CHECK(pcsv.rows.size() == 72);
  for (const auto& row : pcsv.rows) {
    const double lo = parse_double(row[5], "lower"), mean = parse_double(row[4], "mean"),
                 hi = parse_double(row[6], "upper");
    CHECK(lo <= mean);
    CHECK(mean <= hi);
  }

  auto diag = run({"diagnose", (dir / "M5").string(), "--out", (dir / "diag").string()});
  REQUIRE(diag.code == 0);
  auto dcsv = read_csv((dir / "diag" / "diagnostics.csv").string());
  CHECK(dcsv.header == std::vector<std::string>{"parameter", "mean", "sd", "ess", "geweke_z", "psrf"});
}

TEST_CASE("non-finite draws are rejected") {
  auto dir = setup("runtime");
  const auto sim = dir / "sim";
  REQUIRE(run({"fit", "--data", (sim / "panel.csv").string(), "--spec", (sim / "spec.json").string(),
               "--sampler", (dir / "sampler.json").string(), "--out", (dir / "fit").string()})
              .code == 0);
  // Corrupt one coefficient so the likelihood cannot be evaluated.
  auto path = dir / "fit" / "chains.csv";
  auto text = slurp(path);
  auto line_end = text.find('\n');
  auto second = text.find('\n', line_end + 1);
  auto row = text.substr(line_end + 1, second - line_end - 1);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  cells[4] = "nan";
  std::string joined;
  for (std::size_t c = 0; c < cells.size(); ++c) joined += (c ? "," : "") + cells[c];
  text.replace(line_end + 1, row.size(), joined);
  write(path, text);
  auto r = run({"compare", (dir / "fit").string(), "--out", (dir / "cmp").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("unwritable output is a runtime failure") {
  auto dir = setup("unwritable");
  write(dir / "blocker", "x");
  auto r = run({"simulate", "--scenario", (dir / "scenario.json").string(), "--out", (dir / "blocker" / "sub").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("blocker") != std::string::npos);
}

TEST_CASE("changed data is detected") {
  auto dir = setup("changed");
  const auto sim = dir / "sim";
  REQUIRE(run({"fit", "--data", (sim / "panel.csv").string(), "--spec", (sim / "spec.json").string(),
               "--sampler", (dir / "sampler.json").string(), "--out", (dir / "fit").string()})
              .code == 0);
  std::ofstream(sim / "panel.csv", std::ios::app) << "\n";
  auto r = run({"diagnose", (dir / "fit").string(), "--out", (dir / "d").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("changed") != std::string::npos);
}

TEST_CASE("standardize and stratify") {
  auto dir = fixture::scratch_dir("std_strat");
  std::ostringstream raw;
  raw << "level,school_id,year,score,HDI\n";
  for (int i = 1; i <= 2; ++i)
    for (int t = 2006; t <= 2007; ++t)
      for (int j = 1; j <= 4; ++j) raw << i << ",s" << j << "," << t << "," << (j * 25 + i + t % 3) << ",0." << j << "\n";
  write(dir / "raw.csv", raw.str());
  auto r = run({"standardize", "--input", (dir / "raw.csv").string(), "--out", (dir / "std").string()});
  REQUIRE(r.code == 0);
  auto resp = read_csv((dir / "std" / "responses.csv").string());
  CHECK(resp.header == std::vector<std::string>{"level", "school_id", "year", "y", "HDI"});
  CHECK(parse_double(resp.rows[0][3], "y") == doctest::Approx(28.0 / 120.0).epsilon(1e-12));
  auto summary = read_json_file((dir / "std" / "summary.json").string());
  CHECK(summary.at("groups").size() == 4);

  std::ostringstream pop;
  pop << "id,hdi,federal,region\n";
  for (int k = 0; k < 300; ++k) pop << "u" << k << "," << (k % 97) / 97.0 << "," << (k % 50 == 0) << "," << (k % 2 ? "N" : "S") << "\n";
  write(dir / "pop.csv", pop.str());
  r = run({"stratify", "--input", (dir / "pop.csv").string(), "--variable", "hdi", "--certainty-column", "federal",
           "--by", "region", "--strata", "3", "--fraction", "0.2", "--seed", "4", "--out", (dir / "strat").string()});
  REQUIRE(r.code == 0);
  auto report = read_json_file((dir / "strat" / "strata.json").string());
  CHECK(report.at("boundaries").size() == 2);
  CHECK(report.at("objective").get<double>() <= report.at("start_objective").get<double>() + 1e-12);
  auto sample = read_csv((dir / "strat" / "sample.csv").string());
  int certain = 0;
  for (const auto& row : sample.rows) certain += row[2] == "1";
  CHECK(certain == 6);
}

TEST_CASE("every subcommand is byte-for-byte reproducible") {
  auto a = setup("det_a");
  auto b = setup("det_b");
  CHECK(slurp(a / "sim" / "panel.csv") == slurp(b / "sim" / "panel.csv"));
  CHECK(slurp(a / "sim" / "truth.json") == slurp(b / "sim" / "truth.json"));
  for (const auto& dir : {a, b}) {
    const auto sim = dir / "sim";
    REQUIRE(run({"fit", "--data", (sim / "panel.csv").string(), "--spec", (sim / "spec.json").string(),
                 "--sampler", (dir / "sampler.json").string(), "--out", (dir / "fit").string(), "--label", "M5"})
                .code == 0);
    REQUIRE(run({"compare", (dir / "fit").string(), "--out", (dir / "cmp").string()}).code == 0);
    REQUIRE(run({"predict", (dir / "fit").string(), "--out", (dir / "pred").string()}).code == 0);
    REQUIRE(run({"diagnose", (dir / "fit").string(), "--out", (dir / "diag").string()}).code == 0);
  }
  CHECK(slurp(a / "fit" / "chains.csv") == slurp(b / "fit" / "chains.csv"));
  CHECK(slurp(a / "cmp" / "comparison.csv") == slurp(b / "cmp" / "comparison.csv"));
  CHECK(slurp(a / "cmp" / "comparison.txt") == slurp(b / "cmp" / "comparison.txt"));
  CHECK(slurp(a / "pred" / "predictive.csv") == slurp(b / "pred" / "predictive.csv"));
  CHECK(slurp(a / "diag" / "diagnostics.csv") == slurp(b / "diag" / "diagnostics.csv"));
}
