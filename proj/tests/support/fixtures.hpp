#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hdbeta/model.hpp"
#include "hdbeta/panel.hpp"
#include "hdbeta/rng.hpp"

namespace fixture {

/// Balanced table with random covariates (intercepts first) and responses.
inline hdbeta::ObservationTable random_table(std::vector<int> schools, int years, int p, int q,
                                             std::uint64_t seed) {
  hdbeta::PanelShape shape{schools, years};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const std::size_t n = shape.observations();
  std::vector<double> y(n), x, qv;
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = u(rng);
    x.push_back(1.0);
    for (int m = 1; m < p; ++m) x.push_back(z(rng));
    qv.push_back(1.0);
    for (int m = 1; m < q; ++m) qv.push_back(z(rng));
  }
  std::vector<std::string> xn{"intercept"}, qn{"intercept"};
  for (int m = 1; m < p; ++m) xn.push_back("x" + std::to_string(m));
  for (int m = 1; m < q; ++m) qn.push_back("w" + std::to_string(m));
  return hdbeta::ObservationTable(shape, {}, xn, qn, y, x, qv);
}

/// State with small random coefficients and variances in (0.05, 0.5).
inline hdbeta::ParameterState random_state(int levels, int years, const hdbeta::ModelSpec& spec,
                                           std::uint64_t seed) {
  auto s = hdbeta::ParameterState::initial(levels, years, spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.3);
  std::uniform_real_distribution<double> v(0.05, 0.5);
  for (auto* vec : {&s.beta, &s.alpha, &s.alpha0, &s.delta, &s.gamma, &s.gamma0})
    for (auto& e : *vec) e = z(rng);
  for (auto* vec : {&s.V_beta, &s.W_alpha, &s.V_delta, &s.W_gamma})
    for (auto& e : *vec) e = v(rng);
  return s;
}

inline hdbeta::ModelSpec spec_for(hdbeta::PrecisionVariant v, int p, int q,
                                  hdbeta::Family f = hdbeta::Family::beta) {
  hdbeta::ModelSpec spec;
  spec.variant = v;
  spec.family = f;
  spec.p = p;
  spec.q = q;
  return spec;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hdbeta_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
