#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "hdbeta/error.hpp"
#include "hdbeta/model.hpp"
#include "oracles.hpp"

using namespace hdbeta;

namespace {

const PrecisionVariant kVariants[] = {PrecisionVariant::M1, PrecisionVariant::M2, PrecisionVariant::M3,
                                      PrecisionVariant::M4, PrecisionVariant::M5};

int q_for(PrecisionVariant v) { return v == PrecisionVariant::M1 ? 1 : 2; }

}  // namespace

TEST_CASE("mean link") {
  std::vector<double> x{1.0, 1.0};
  CHECK(mean_link(x, std::vector<double>{0.0, 0.0}) == 0.5);
  CHECK(mean_link(x, std::vector<double>{0.3, -0.3}) == 0.5);
  const double big = mean_link(std::vector<double>{1.0}, std::vector<double>{40.0});
  CHECK(std::isfinite(big));
  CHECK(big < 1.0);
  const double small = mean_link(std::vector<double>{1.0}, std::vector<double>{-800.0});
  CHECK(small > 0.0);
  std::vector<double> nan{std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS(mean_link(nan, std::vector<double>{1.0}));
  for (double eta : {-5.0, -0.7, 0.0, 1.3, 12.0})
    CHECK(mean_link(std::vector<double>{1.0}, std::vector<double>{eta}) +
              mean_link(std::vector<double>{1.0}, std::vector<double>{-eta}) ==
          doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("precision link carries a negative sign") {
  CHECK(precision_link(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0}) == 1.0);
  CHECK(precision_link(std::vector<double>{1.0, 0.0}, std::vector<double>{-2.0, 5.0}) ==
        doctest::Approx(7.389056).epsilon(1e-7));
  CHECK(precision_link(std::vector<double>{1.0}, std::vector<double>{3.0}) ==
        doctest::Approx(0.049787).epsilon(1e-5));
  std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK_THROWS(precision_link(std::vector<double>{1.0}, inf));
}

TEST_CASE("beta density closed forms") {
  CHECK(std::abs(beta_logpdf(0.3, 0.5, 2.0)) < 1e-14);
  CHECK(beta_logpdf(0.5, 0.5, 4.0) == doctest::Approx(std::log(1.5)).epsilon(1e-13));
  CHECK(beta_logpdf(0.5, 0.5, 4.0) == doctest::Approx(0.405465).epsilon(1e-6));
  CHECK_THROWS(beta_logpdf(0.0, 0.5, 2.0));
  CHECK_THROWS(beta_logpdf(0.5, 1.0, 2.0));
  CHECK_THROWS(beta_logpdf(0.5, 0.5, 0.0));
}

TEST_CASE("beta density agrees with the Gamma-function form and is exchangeable") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.02, 0.98), lp(std::log(0.5), std::log(300.0));
  for (int k = 0; k < 200; ++k) {
    const double y = u(rng), mu = u(rng), phi = std::exp(lp(rng));
    const double ref = std::log(oracle::beta_density(y, mu, phi));
    CHECK(beta_logpdf(y, mu, phi) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(beta_logpdf(y, mu, phi) == doctest::Approx(beta_logpdf(1 - y, 1 - mu, phi)).epsilon(1e-12));
  }
}

TEST_CASE("beta density integrates to one") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95), lp(std::log(0.5), std::log(200.0));
  for (int k = 0; k < 30; ++k) {
    const double mu = u(rng), phi = std::exp(lp(rng));
    CHECK(std::abs(oracle::beta_normalization(mu, phi) - 1.0) < 1e-4);
  }
  // Smooth cases by the plain trapezoid rule.
  for (auto [mu, phi] : {std::pair{0.5, 4.0}, {0.3, 10.0}, {0.7, 25.0}, {0.4, 5.0}})
    CHECK(std::abs(oracle::beta_normalization_trapezoid(mu, phi, 2000) - 1.0) < 1e-4);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 0.95), lp(std::log(1.0), std::log(100.0));
  for (int k = 0; k < 100; ++k) {
    const double y = u(rng), mu = u(rng), phi = std::exp(lp(rng));
    auto [dmu, dphi] = beta_logpdf_gradient(y, mu, phi);
    const double hm = 1e-6 * std::min(mu, 1 - mu), hp = 1e-6 * phi;
    const double nmu = (beta_logpdf(y, mu + hm, phi) - beta_logpdf(y, mu - hm, phi)) / (2 * hm);
    const double nphi = (beta_logpdf(y, mu, phi + hp) - beta_logpdf(y, mu, phi - hp)) / (2 * hp);
    CHECK(std::abs(dmu - nmu) <= 1e-5 * std::max(1.0, std::abs(nmu)));
    CHECK(std::abs(dphi - nphi) <= 1e-5 * std::max(1.0, std::abs(nphi)));
  }
}

TEST_CASE("beta moments") {
  auto [m1, v1] = beta_moments(0.5, 1.0);
  CHECK(m1 == 0.5);
  CHECK(v1 == doctest::Approx(0.125));
  CHECK(beta_moments(0.25, 3.0).second == doctest::Approx(0.046875));
  CHECK(beta_moments(0.5, 1e8).second < 1e-8);
  CHECK_THROWS(beta_moments(0.0, 1.0));
  CHECK_THROWS(beta_moments(0.5, -1.0));
}

TEST_CASE("log-gamma and digamma accuracy") {
  CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
  CHECK(log_gamma(1e6) == doctest::Approx(std::lgamma(1e6)).epsilon(1e-13));
  CHECK(log_gamma(1e-8) == doctest::Approx(std::lgamma(1e-8)).epsilon(1e-13));
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-14));
}

TEST_CASE("single observation likelihood and additivity") {
  const double y = 0.37;
  ObservationTable one({{1}, 1}, {}, {"intercept"}, {"intercept"}, {y}, {1.0}, {1.0});
  auto spec = fixture::spec_for(PrecisionVariant::M1, 1, 1);
  auto s = ParameterState::initial(1, 1, spec);
  CHECK(log_likelihood(one, s, spec) == doctest::Approx(beta_logpdf(y, 0.5, 1.0)).epsilon(1e-15));

  ObservationTable two({{2}, 1}, {}, {"intercept"}, {"intercept"}, {y, y}, {1.0, 1.0}, {1.0, 1.0});
  CHECK(log_likelihood(two, s, spec) == 2.0 * log_likelihood(one, s, spec));
}

TEST_CASE("likelihood matches the nested-loop oracle") {
  for (auto v : kVariants)
    for (auto fam : {Family::beta, Family::normal_logit}) {
      const int q = q_for(v);
      auto table = fixture::random_table({2, 2, 2}, 2, 3, q, 17);
      auto spec = fixture::spec_for(v, 3, q, fam);
      auto s = fixture::random_state(3, 2, spec, 23);
      CHECK(std::abs(log_likelihood(table, s, spec) - oracle::log_likelihood(table, s, fam)) < 1e-10);
    }
}

TEST_CASE("normal-logit response scale adds the logit Jacobian") {
  const double y = 0.2, loc = 0.4, phi = 3.0;
  const double native = normal_logit_logpdf(y, loc, phi);
  CHECK(normal_logit_logpdf(y, loc, phi, DensityScale::response) ==
        doctest::Approx(native - std::log(y * (1 - y))));
  const double z = std::log(y / (1 - y));
  CHECK(native == doctest::Approx(0.5 * std::log(phi / (2 * M_PI)) - 0.5 * phi * (z - loc) * (z - loc)));
}

TEST_CASE("prior matches the term-by-term oracle") {
  for (auto v : kVariants) {
    const int q = q_for(v);
    auto spec = fixture::spec_for(v, 2, q);
    spec.prior.beta_variance_mean = {0.2, 0.05};
    spec.prior.alpha_initial_mean = {0.5, -0.1};
    spec.prior.initial_variance = 50.0;
    auto s = fixture::random_state(3, 4, spec, 31);
    CHECK(std::abs(log_prior(s, spec) - oracle::log_prior(s, spec)) < 1e-10);
  }
}

TEST_CASE("prior with coefficients at their centres has only normalising constants") {
  auto spec = fixture::spec_for(PrecisionVariant::M5, 2, 2);
  auto s = fixture::random_state(2, 3, spec, 8);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 3; ++t) {
      for (int m = 0; m < 2; ++m) s.beta_at(i, t)[m] = s.alpha_at(t)[m];
      auto d = s.delta_unit(s.layout.unit_of(i, t));
      for (int k = 0; k < 2; ++k) d[k] = s.gamma[t * 2 + k];
    }
  double constants = 0.0, rest = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 3; ++t) {
      for (int m = 0; m < 2; ++m) constants += -0.5 * std::log(2 * M_PI * s.V_beta_at(i, m));
      for (int k = 0; k < 2; ++k) constants += -0.5 * std::log(2 * M_PI * s.V_delta_at(i, k));
    }
  for (int m = 0; m < 2; ++m) {
    rest += normal_logpdf(s.alpha0[m], 0.0, 100.0) + inverse_gamma_logpdf(s.W_alpha[m], 2.0, 0.1);
    for (int t = 0; t < 3; ++t) rest += normal_logpdf(s.alpha_at(t)[m], t ? s.alpha_at(t - 1)[m] : s.alpha0[m], s.W_alpha[m]);
    for (int i = 0; i < 2; ++i) rest += inverse_gamma_logpdf(s.V_beta_at(i, m), 2.0, 0.1);
  }
  for (int k = 0; k < 2; ++k) {
    rest += normal_logpdf(s.gamma0[k], 0.0, 100.0) + inverse_gamma_logpdf(s.W_gamma[k], 2.0, 0.1);
    for (int t = 0; t < 3; ++t) rest += normal_logpdf(s.gamma[t * 2 + k], t ? s.gamma[(t - 1) * 2 + k] : s.gamma0[k], s.W_gamma[k]);
    for (int i = 0; i < 2; ++i) rest += inverse_gamma_logpdf(s.V_delta_at(i, k), 2.0, 0.1);
  }
  CHECK(log_prior(s, spec) == doctest::Approx(constants + rest).epsilon(1e-13));
}

TEST_CASE("single year random walk with alpha_1 at the prior mean") {
  auto spec = fixture::spec_for(PrecisionVariant::M1, 1, 1);
  auto s = ParameterState::initial(1, 1, spec);
  s.alpha0[0] = 0.0;
  s.alpha[0] = 0.0;
  s.beta[0] = 0.0;
  const double walk = normal_logpdf(s.alpha[0], s.alpha0[0], s.W_alpha[0]);
  CHECK(walk == doctest::Approx(-0.5 * std::log(2 * M_PI * s.W_alpha[0])));
}

TEST_CASE("nonpositive variances are rejected by the prior") {
  auto spec = fixture::spec_for(PrecisionVariant::M5, 1, 1);
  auto s = ParameterState::initial(2, 2, spec);
  s.V_beta[0] = 0.0;
  CHECK_THROWS(log_prior(s, spec));
}

TEST_CASE("tied deltas are broadcast") {
  auto spec = fixture::spec_for(PrecisionVariant::M3, 1, 2);
  auto s = fixture::random_state(3, 4, spec, 2);
  CHECK(s.layout.units() == 3);
  for (int t = 0; t < 4; ++t) CHECK(s.delta_at(1, t)[1] == s.delta_unit(1)[1]);
  auto m4 = ParameterState::initial(3, 4, fixture::spec_for(PrecisionVariant::M4, 1, 2));
  CHECK(m4.layout.units() == 4);
  CHECK(m4.layout.unit_of(2, 3) == 3);
  auto m5 = ParameterState::initial(3, 4, fixture::spec_for(PrecisionVariant::M5, 1, 2));
  CHECK(m5.layout.units() == 12);
  auto m1 = ParameterState::initial(3, 4, fixture::spec_for(PrecisionVariant::M1, 1, 1));
  CHECK(m1.layout.units() == 1);
  CHECK(m1.gamma.empty());
  CHECK(m1.W_gamma.empty());
}

TEST_CASE("coarser states embed into finer variants with identical likelihood") {
  const std::pair<PrecisionVariant, PrecisionVariant> moves[] = {
      {PrecisionVariant::M2, PrecisionVariant::M3}, {PrecisionVariant::M2, PrecisionVariant::M4},
      {PrecisionVariant::M3, PrecisionVariant::M5}, {PrecisionVariant::M4, PrecisionVariant::M5},
      {PrecisionVariant::M2, PrecisionVariant::M5}};
  auto table = fixture::random_table({3, 2}, 3, 2, 2, 12);
  for (auto [coarse, fine] : moves) {
    auto cs = fixture::spec_for(coarse, 2, 2);
    auto fs = fixture::spec_for(fine, 2, 2);
    auto s = fixture::random_state(2, 3, cs, 5);
    auto e = embed_state(s, fine, fs);
    CHECK(log_likelihood(table, e, fs) == log_likelihood(table, s, cs));
  }
  auto t1 = fixture::random_table({3, 2}, 3, 2, 1, 12);
  auto s1 = fixture::random_state(2, 3, fixture::spec_for(PrecisionVariant::M1, 2, 1), 5);
  for (auto fine : {PrecisionVariant::M2, PrecisionVariant::M3, PrecisionVariant::M4, PrecisionVariant::M5}) {
    auto fs = fixture::spec_for(fine, 2, 1);
    CHECK(log_likelihood(t1, embed_state(s1, fine, fs), fs) ==
          log_likelihood(t1, s1, fixture::spec_for(PrecisionVariant::M1, 2, 1)));
  }
}

TEST_CASE("spec validation") {
  auto spec = fixture::spec_for(PrecisionVariant::M1, 2, 2);
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec.q = 1;
  CHECK_NOTHROW(spec.validate());
  spec.p = 0;
  CHECK_THROWS_AS(spec.validate(), InputError);
  PriorSpec pr;
  pr.variance_shape = 2.5;
  CHECK_THROWS_AS(pr.validate(), InputError);
  pr.variance_shape = 1.5;
  pr.initial_variance = 0.0;
  CHECK_THROWS_AS(pr.validate(), InputError);
  PriorSpec d;
  CHECK(d.variance_rate(d.beta_variance_mean, 0) == doctest::Approx(0.1));
}

TEST_CASE("parameter names are one-based and round-trip through values") {
  auto spec = fixture::spec_for(PrecisionVariant::M5, 3, 2);
  auto s = fixture::random_state(2, 5, spec, 3);
  auto names = s.names();
  CHECK(names.size() == s.values().size());
  CHECK(std::find(names.begin(), names.end(), "beta[i=2,t=5,m=3]") != names.end());
  auto copy = ParameterState::initial(2, 5, spec);
  copy.assign(s.values());
  CHECK(copy.values() == s.values());
}
