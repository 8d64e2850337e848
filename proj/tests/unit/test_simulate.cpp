#include <doctest.h>

#include <cmath>

#include "hdbeta/error.hpp"
#include "hdbeta/simulate.hpp"

using namespace hdbeta;

namespace {

SimulationScenario bare(int levels, int years, int schools) {
  SimulationScenario sc;
  sc.levels = levels;
  sc.years = years;
  sc.schools_per_level.assign(levels, schools);
  sc.variant = PrecisionVariant::M1;
  sc.alpha_start = {0.0};
  sc.gamma_start = {0.0};
  sc.W_alpha = {0.0};
  sc.V_beta = {0.0};
  sc.W_gamma = {0.0};
  sc.V_delta = {0.0};
  return sc;
}

}  // namespace

TEST_CASE("zero variances pin every coefficient at the starting mean") {
  auto sc = SimulationScenario::school_panel(4);
  for (auto* v : {&sc.W_alpha, &sc.V_beta, &sc.W_gamma, &sc.V_delta}) std::fill(v->begin(), v->end(), 0.0);
  auto sim = simulate_panel(sc);
  const auto& s = sim.truth;
  for (int i = 0; i < sc.levels; ++i)
    for (int t = 0; t < sc.years; ++t)
      for (int m = 0; m < sc.p(); ++m) {
        CHECK(s.beta_at(i, t)[m] == sc.alpha_start[m]);
        CHECK(s.alpha_at(t)[m] == sc.alpha_start[m]);
      }
}

TEST_CASE("fixed seed reproduces table and truth") {
  auto sc = SimulationScenario::school_panel(9);
  auto a = simulate_panel(sc);
  auto b = simulate_panel(sc);
  CHECK(a.truth.values() == b.truth.values());
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t k = 0; k < a.table.size(); ++k) {
    CHECK(a.table.response(k) == b.table.response(k));
    CHECK(a.table.mean_covariates(k)[2] == b.table.mean_covariates(k)[2]);
  }
  sc.seed = 10;
  CHECK(simulate_panel(sc).truth.values() != a.truth.values());
}

TEST_CASE("constant mean and precision reproduce beta moments") {
  auto sc = bare(1, 1, 10000);
  sc.gamma_start = {-std::log(12.0)};
  auto sim = simulate_panel(sc);
  double mean = 0.0, var = 0.0;
  const auto y = sim.table.responses();
  for (double v : y) mean += v;
  mean /= y.size();
  for (double v : y) var += (v - mean) * (v - mean);
  var /= (y.size() - 1);
  CHECK(std::abs(mean - 0.5) < 0.01);
  CHECK(std::abs(var - 0.25 / 13) < 0.1 * 0.25 / 13);
}

TEST_CASE("simulated responses lie strictly inside the unit interval") {
  for (auto v : {PrecisionVariant::M2, PrecisionVariant::M3, PrecisionVariant::M4, PrecisionVariant::M5}) {
    auto sc = SimulationScenario::school_panel(2);
    sc.variant = v;
    sc.gamma_start = {-6.0, -0.5};
    auto sim = simulate_panel(sc);
    for (double y : sim.table.responses()) CHECK((y > 0.0 && y < 1.0));
    CHECK(sim.table.p() == 6);
    CHECK(sim.table.q() == 2);
  }
}

TEST_CASE("random-walk increments have variance W_alpha") {
  const double W = 0.04;
  std::vector<double> inc;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto sc = bare(1, 8, 2);
    sc.W_alpha = {W};
    sc.seed = seed;
    auto sim = simulate_panel(sc);
    double prev = sim.truth.alpha0[0];
    for (int t = 0; t < 8; ++t) {
      inc.push_back(sim.truth.alpha_at(t)[0] - prev);
      prev = sim.truth.alpha_at(t)[0];
    }
  }
  double ss = 0.0;
  for (double d : inc) ss += d * d;
  const double est = ss / inc.size();
  const double se = W * std::sqrt(2.0 / inc.size());
  CHECK(std::abs(est - W) < 3 * se);
}

TEST_CASE("tying follows the variant") {
  auto sc = SimulationScenario::school_panel(3);
  sc.variant = PrecisionVariant::M3;
  auto sim = simulate_panel(sc);
  for (int t = 1; t < sc.years; ++t) CHECK(sim.truth.delta_at(2, t)[1] == sim.truth.delta_at(2, 0)[1]);
  sc.variant = PrecisionVariant::M4;
  sim = simulate_panel(sc);
  CHECK(sim.truth.delta_at(0, 3)[0] == sim.truth.delta_at(2, 3)[0]);
}

TEST_CASE("covariate generators") {
  auto sc = SimulationScenario::school_panel(6);
  sc.schools_per_level = {400, 400, 400};
  auto sim = simulate_panel(sc);
  const auto& t = sim.table;
  double adm = 0.0, lib = 0.0, nst = 0.0, nst2 = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double a = t.mean_covariates(k)[1];
    CHECK((a == 0.0 || a == 1.0));
    adm += a;
    lib += t.mean_covariates(k)[3];
    nst += t.precision_covariates(k)[1];
    nst2 += t.precision_covariates(k)[1] * t.precision_covariates(k)[1];
  }
  const double n = static_cast<double>(t.size());
  CHECK(adm / n == doctest::Approx(0.1).epsilon(0.25));
  CHECK(lib / n == doctest::Approx(0.7).epsilon(0.05));
  CHECK(std::abs(nst / n) < 1e-10);
  CHECK(std::abs(nst2 / (n - 1) - 1.0) < 1e-8);
  // ADM is fixed per school over years.
  for (int j = 0; j < 5; ++j) CHECK(t.mean_covariates(t.offset({0, j, 0}))[1] == t.mean_covariates(t.offset({0, j, 3}))[1]);
}

TEST_CASE("invalid scenarios") {
  auto sc = SimulationScenario::school_panel();
  sc.W_alpha[0] = -1.0;
  CHECK_THROWS_AS(sc.validate(), InputError);
  sc = SimulationScenario::school_panel();
  sc.variant = PrecisionVariant::M1;
  CHECK_THROWS_AS(sc.validate(), InputError);
  sc = SimulationScenario::school_panel();
  sc.schools_per_level = {3};
  CHECK_THROWS_AS(sc.validate(), InputError);
}
