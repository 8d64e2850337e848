#include "hdbeta/model.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hdbeta/error.hpp"

namespace hdbeta {

namespace {

using MathPolicy = boost::math::policies::policy<
    boost::math::policies::pole_error<boost::math::policies::errno_on_error>,
    boost::math::policies::overflow_error<boost::math::policies::errno_on_error>,
    boost::math::policies::evaluation_error<boost::math::policies::errno_on_error>,
    boost::math::policies::promote_double<false>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double inv_logit(double eta) {
  double mu;
  if (eta >= 0.0) {
    mu = 1.0 / (1.0 + std::exp(-eta));
  } else {
    const double e = std::exp(eta);
    mu = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - 0x1.0p-53;
  return std::min(hi, std::max(lo, mu));
}

// Unchecked beta log-density; -inf outside the support.
double beta_logpdf_raw(double y, double mu, double phi) {
  const double a = mu * phi;
  const double b = (1.0 - mu) * phi;
  if (!(a > 0.0 && b > 0.0 && std::isfinite(phi))) return -kInf;
  return log_gamma(phi) - log_gamma(a) - log_gamma(b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

double normal_logit_raw(double y, double location, double phi, DensityScale scale) {
  if (!(phi > 0.0 && std::isfinite(phi))) return -kInf;
  const double z = std::log(y) - std::log1p(-y);
  double lp = 0.5 * (std::log(phi) - kLogTwoPi) - 0.5 * phi * (z - location) * (z - location);
  if (scale == DensityScale::response) lp -= std::log(y) + std::log1p(-y);
  return lp;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::domain_error(std::string("non-finite ") + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Names

std::string to_string(PrecisionVariant v) {
  switch (v) {
    case PrecisionVariant::M1: return "M1";
    case PrecisionVariant::M2: return "M2";
    case PrecisionVariant::M3: return "M3";
    case PrecisionVariant::M4: return "M4";
    case PrecisionVariant::M5: return "M5";
  }
  return "?";
}

std::string to_string(Family f) { return f == Family::beta ? "beta" : "normal_logit"; }

PrecisionVariant parse_variant(const std::string& s) {
  if (s == "M1") return PrecisionVariant::M1;
  if (s == "M2") return PrecisionVariant::M2;
  if (s == "M3") return PrecisionVariant::M3;
  if (s == "M4") return PrecisionVariant::M4;
  if (s == "M5") return PrecisionVariant::M5;
  throw InputError("unknown precision variant '" + s + "' (expected M1..M5)");
}

Family parse_family(const std::string& s) {
  if (s == "beta") return Family::beta;
  if (s == "normal_logit") return Family::normal_logit;
  throw InputError("unknown family '" + s + "' (expected beta or normal_logit)");
}

// ---------------------------------------------------------------------------
// Specs

double PriorSpec::variance_mean(const std::vector<double>& block, int component) const {
  return block.empty() ? default_variance_mean : block.at(component);
}

double PriorSpec::variance_rate(const std::vector<double>& block, int component) const {
  return variance_mean(block, component) * (variance_shape - 1.0);
}

double PriorSpec::initial_mean(const std::vector<double>& block, int component) const {
  return block.empty() ? 0.0 : block.at(component);
}

void PriorSpec::validate() const {
  if (!(variance_shape > 1.0 && variance_shape <= 2.0))
    throw InputError("inverse-gamma shape must lie in (1, 2] (finite mean, infinite variance)");
  if (!(initial_variance > 0.0)) throw InputError("initial state variance C0 must be positive");
  if (!(default_variance_mean > 0.0)) throw InputError("prior variance means must be positive");
  for (const auto* block : {&beta_variance_mean, &alpha_variance_mean, &delta_variance_mean,
                            &gamma_variance_mean})
    for (double v : *block)
      if (!(v > 0.0)) throw InputError("prior variance means must be positive");
}

void ModelSpec::validate() const {
  if (p < 1 || q < 1) throw InputError("p and q must be at least 1");
  if (variant == PrecisionVariant::M1 && q != 1)
    throw InputError("M1 has an intercept-only precision (q = 1)");
  prior.validate();
  auto check = [](const std::vector<double>& v, int n, const char* what) {
    if (!v.empty() && static_cast<int>(v.size()) != n)
      throw InputError(std::string("prior block ") + what + " has the wrong length");
  };
  check(prior.beta_variance_mean, p, "beta_variance_mean");
  check(prior.alpha_variance_mean, p, "alpha_variance_mean");
  check(prior.alpha_initial_mean, p, "alpha_initial_mean");
  check(prior.delta_variance_mean, q, "delta_variance_mean");
  check(prior.gamma_variance_mean, q, "gamma_variance_mean");
  check(prior.gamma_initial_mean, q, "gamma_initial_mean");
}

// ---------------------------------------------------------------------------
// Delta tying

DeltaLayout::DeltaLayout(PrecisionVariant variant, int levels, int years)
    : variant_(variant), levels_(levels), years_(years) {}

int DeltaLayout::units() const {
  switch (variant_) {
    case PrecisionVariant::M1:
    case PrecisionVariant::M2: return 1;
    case PrecisionVariant::M3: return levels_;
    case PrecisionVariant::M4: return years_;
    case PrecisionVariant::M5: return levels_ * years_;
  }
  return 0;
}

int DeltaLayout::unit_of(int level, int year) const {
  switch (variant_) {
    case PrecisionVariant::M1:
    case PrecisionVariant::M2: return 0;
    case PrecisionVariant::M3: return level;
    case PrecisionVariant::M4: return year;
    case PrecisionVariant::M5: return level * years_ + year;
  }
  return 0;
}

int DeltaLayout::level_of_unit(int unit) const {
  switch (variant_) {
    case PrecisionVariant::M3: return unit;
    case PrecisionVariant::M5: return unit / years_;
    default: return -1;
  }
}

int DeltaLayout::year_of_unit(int unit) const {
  switch (variant_) {
    case PrecisionVariant::M4: return unit;
    case PrecisionVariant::M5: return unit % years_;
    default: return -1;
  }
}

bool DeltaLayout::hierarchical() const {
  return variant_ == PrecisionVariant::M3 || dynamic();
}

bool DeltaLayout::dynamic() const {
  return variant_ == PrecisionVariant::M4 || variant_ == PrecisionVariant::M5;
}

int DeltaLayout::variance_rows() const {
  switch (variant_) {
    case PrecisionVariant::M3:
    case PrecisionVariant::M5: return levels_;
    case PrecisionVariant::M4: return 1;
    default: return 0;
  }
}

int DeltaLayout::variance_row(int unit) const {
  const int lvl = level_of_unit(unit);
  return lvl < 0 ? 0 : lvl;
}

int DeltaLayout::gamma_slots() const {
  if (dynamic()) return years_;
  return variant_ == PrecisionVariant::M3 ? 1 : 0;
}

int DeltaLayout::gamma_slot(int unit) const {
  const int yr = year_of_unit(unit);
  return yr < 0 ? 0 : yr;
}

// ---------------------------------------------------------------------------
// Parameter state

ParameterState ParameterState::initial(int levels, int years, const ModelSpec& spec) {
  ParameterState s;
  s.levels = levels;
  s.years = years;
  s.p = spec.p;
  s.q = spec.q;
  s.layout = DeltaLayout(spec.variant, levels, years);
  const auto& pr = spec.prior;
  const auto I = static_cast<std::size_t>(levels), T = static_cast<std::size_t>(years);
  const auto P = static_cast<std::size_t>(spec.p), Q = static_cast<std::size_t>(spec.q);

  s.beta.assign(I * T * P, 0.0);
  s.alpha.assign(T * P, 0.0);
  s.alpha0.resize(P);
  for (std::size_t m = 0; m < P; ++m) s.alpha0[m] = pr.initial_mean(pr.alpha_initial_mean, static_cast<int>(m));
  s.delta.assign(static_cast<std::size_t>(s.layout.units()) * Q, 0.0);
  s.gamma.assign(static_cast<std::size_t>(s.layout.gamma_slots()) * Q, 0.0);
  if (s.layout.dynamic()) {
    s.gamma0.resize(Q);
    for (std::size_t k = 0; k < Q; ++k) s.gamma0[k] = pr.initial_mean(pr.gamma_initial_mean, static_cast<int>(k));
  }
  s.V_beta.resize(I * P);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t m = 0; m < P; ++m)
      s.V_beta[i * P + m] = pr.variance_mean(pr.beta_variance_mean, static_cast<int>(m));
  s.W_alpha.resize(P);
  for (std::size_t m = 0; m < P; ++m) s.W_alpha[m] = pr.variance_mean(pr.alpha_variance_mean, static_cast<int>(m));
  s.V_delta.resize(static_cast<std::size_t>(s.layout.variance_rows()) * Q);
  for (std::size_t r = 0; r < static_cast<std::size_t>(s.layout.variance_rows()); ++r)
    for (std::size_t k = 0; k < Q; ++k)
      s.V_delta[r * Q + k] = pr.variance_mean(pr.delta_variance_mean, static_cast<int>(k));
  if (s.layout.dynamic()) {
    s.W_gamma.resize(Q);
    for (std::size_t k = 0; k < Q; ++k) s.W_gamma[k] = pr.variance_mean(pr.gamma_variance_mean, static_cast<int>(k));
  }
  return s;
}

std::span<const double> ParameterState::gamma_at(int t) const {
  if (layout.dynamic()) return {gamma.data() + static_cast<std::size_t>(t) * q, static_cast<std::size_t>(q)};
  if (layout.hierarchical()) return {gamma.data(), static_cast<std::size_t>(q)};
  return delta_unit(0);
}

namespace {

std::string idx(std::initializer_list<std::pair<const char*, int>> parts) {
  std::string s = "[";
  bool first = true;
  for (const auto& [key, value] : parts) {
    if (!first) s += ',';
    first = false;
    s += key;
    s += '=';
    s += std::to_string(value + 1);
  }
  return s + "]";
}

// Visits every scalar in the canonical order with its name.
template <typename State, typename F>
void visit_parameters(State& s, F&& f) {
  for (int i = 0; i < s.levels; ++i)
    for (int t = 0; t < s.years; ++t)
      for (int m = 0; m < s.p; ++m)
        f("beta" + idx({{"i", i}, {"t", t}, {"m", m}}), s.beta[(static_cast<std::size_t>(i) * s.years + t) * s.p + m]);
  for (int t = 0; t < s.years; ++t)
    for (int m = 0; m < s.p; ++m)
      f("alpha" + idx({{"t", t}, {"m", m}}), s.alpha[static_cast<std::size_t>(t) * s.p + m]);
  for (int m = 0; m < s.p; ++m) f("alpha0" + idx({{"m", m}}), s.alpha0[m]);

  const auto& L = s.layout;
  for (int u = 0; u < L.units(); ++u) {
    for (int k = 0; k < s.q; ++k) {
      std::string name = "delta";
      const int lvl = L.level_of_unit(u), yr = L.year_of_unit(u);
      if (lvl >= 0 && yr >= 0) name += idx({{"i", lvl}, {"t", yr}, {"k", k}});
      else if (lvl >= 0) name += idx({{"i", lvl}, {"k", k}});
      else if (yr >= 0) name += idx({{"t", yr}, {"k", k}});
      else name += idx({{"k", k}});
      f(name, s.delta[static_cast<std::size_t>(u) * s.q + k]);
    }
  }
  for (int g = 0; g < L.gamma_slots(); ++g)
    for (int k = 0; k < s.q; ++k)
      f(L.dynamic() ? "gamma" + idx({{"t", g}, {"k", k}}) : "gamma" + idx({{"k", k}}),
        s.gamma[static_cast<std::size_t>(g) * s.q + k]);
  for (std::size_t k = 0; k < s.gamma0.size(); ++k) f("gamma0" + idx({{"k", static_cast<int>(k)}}), s.gamma0[k]);

  for (int i = 0; i < s.levels; ++i)
    for (int m = 0; m < s.p; ++m) f("V_beta" + idx({{"i", i}, {"m", m}}), s.V_beta[static_cast<std::size_t>(i) * s.p + m]);
  for (int m = 0; m < s.p; ++m) f("W_alpha" + idx({{"m", m}}), s.W_alpha[m]);
  for (int r = 0; r < L.variance_rows(); ++r)
    for (int k = 0; k < s.q; ++k)
      f(L.variance_rows() > 1 ? "V_delta" + idx({{"i", r}, {"k", k}}) : "V_delta" + idx({{"k", k}}),
        s.V_delta[static_cast<std::size_t>(r) * s.q + k]);
  for (std::size_t k = 0; k < s.W_gamma.size(); ++k) f("W_gamma" + idx({{"k", static_cast<int>(k)}}), s.W_gamma[k]);
}

}  // namespace

std::vector<std::string> ParameterState::names() const {
  std::vector<std::string> out;
  visit_parameters(*this, [&](std::string name, double) { out.push_back(std::move(name)); });
  return out;
}

std::vector<double> ParameterState::values() const {
  std::vector<double> out;
  visit_parameters(*this, [&](const std::string&, double v) { out.push_back(v); });
  return out;
}

void ParameterState::assign(std::span<const double> flat) {
  std::size_t k = 0;
  std::size_t count = 0;
  visit_parameters(*this, [&](const std::string&, double&) { ++count; });
  if (count != flat.size()) throw InputError("parameter vector has the wrong length");
  visit_parameters(*this, [&](const std::string&, double& v) { v = flat[k++]; });
}

void ParameterState::check_dimensions(const ModelSpec& spec) const {
  const DeltaLayout expect(spec.variant, levels, years);
  const auto I = static_cast<std::size_t>(levels), T = static_cast<std::size_t>(years);
  const auto P = static_cast<std::size_t>(spec.p), Q = static_cast<std::size_t>(spec.q);
  const auto R = static_cast<std::size_t>(expect.variance_rows());
  const auto G = static_cast<std::size_t>(expect.gamma_slots());
  const bool ok = p == spec.p && q == spec.q && layout.variant() == spec.variant &&
                  beta.size() == I * T * P && alpha.size() == T * P && alpha0.size() == P &&
                  delta.size() == static_cast<std::size_t>(expect.units()) * Q &&
                  gamma.size() == G * Q && gamma0.size() == (expect.dynamic() ? Q : 0) &&
                  V_beta.size() == I * P && W_alpha.size() == P && V_delta.size() == R * Q &&
                  W_gamma.size() == (expect.dynamic() ? Q : 0);
  if (!ok) throw InputError("parameter state dimensions do not match the model specification");
}

ParameterState embed_state(const ParameterState& s, PrecisionVariant finer,
                           const ModelSpec& finer_spec) {
  using V = PrecisionVariant;
  const V from = s.layout.variant();
  const bool allowed = from == finer || from == V::M1 ||
                       (from == V::M2 && finer != V::M1) ||
                       ((from == V::M3 || from == V::M4) && finer == V::M5);
  if (!allowed) throw InputError("cannot embed " + to_string(from) + " into " + to_string(finer));
  if (finer_spec.q != s.q || finer_spec.p != s.p || finer_spec.variant != finer)
    throw InputError("embedding target must share p and q");

  ParameterState out = ParameterState::initial(s.levels, s.years, finer_spec);
  out.beta = s.beta;
  out.alpha = s.alpha;
  out.alpha0 = s.alpha0;
  out.V_beta = s.V_beta;
  out.W_alpha = s.W_alpha;

  const auto& L = out.layout;
  for (int u = 0; u < L.units(); ++u) {
    const int i = std::max(0, L.level_of_unit(u));
    const int t = std::max(0, L.year_of_unit(u));
    auto src = s.delta_at(i, t);
    std::copy(src.begin(), src.end(), out.delta_unit(u).begin());
  }
  for (int g = 0; g < L.gamma_slots(); ++g) {
    auto src = s.gamma_at(g);
    std::copy(src.begin(), src.end(), out.gamma.begin() + static_cast<std::ptrdiff_t>(g) * s.q);
  }
  if (L.dynamic()) {
    out.gamma0 = s.layout.dynamic() ? s.gamma0 : std::vector<double>(s.gamma_at(0).begin(), s.gamma_at(0).end());
    if (s.layout.dynamic()) out.W_gamma = s.W_gamma;
  }
  if (s.layout.variance_rows() > 0) {
    for (int r = 0; r < L.variance_rows(); ++r)
      for (int k = 0; k < s.q; ++k)
        out.V_delta[static_cast<std::size_t>(r) * s.q + k] =
            s.V_delta_at(std::min(r, s.layout.variance_rows() - 1), k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Densities

double log_gamma(double x) { return boost::math::lgamma(x, MathPolicy()); }
double digamma(double x) { return boost::math::digamma(x, MathPolicy()); }

double inverse_logit(double eta) { return inv_logit(eta); }

double mean_link(std::span<const double> x, std::span<const double> beta) {
  if (x.size() != beta.size()) throw std::invalid_argument("mean_link: length mismatch");
  require_finite(x, "covariate");
  require_finite(beta, "coefficient");
  return inv_logit(dot(x, beta));
}

double precision_link(std::span<const double> qvec, std::span<const double> delta) {
  if (qvec.size() != delta.size()) throw std::invalid_argument("precision_link: length mismatch");
  require_finite(qvec, "covariate");
  require_finite(delta, "coefficient");
  return std::exp(-dot(qvec, delta));
}

namespace {

void check_beta_domain(double y, double mu, double phi) {
  if (!(y > 0.0 && y < 1.0)) throw std::domain_error("beta density: y must lie in (0,1)");
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("beta density: mu must lie in (0,1)");
  if (!(phi > 0.0 && std::isfinite(phi))) throw std::domain_error("beta density: phi must be positive");
}

}  // namespace

double beta_logpdf(double y, double mu, double phi) {
  check_beta_domain(y, mu, phi);
  return beta_logpdf_raw(y, mu, phi);
}

std::pair<double, double> beta_logpdf_gradient(double y, double mu, double phi) {
  check_beta_domain(y, mu, phi);
  const double a = mu * phi, b = (1.0 - mu) * phi;
  const double ly = std::log(y), l1y = std::log1p(-y);
  const double da = digamma(a), db = digamma(b);
  const double d_mu = phi * (db - da + ly - l1y);
  const double d_phi = digamma(phi) - mu * da - (1.0 - mu) * db + mu * ly + (1.0 - mu) * l1y;
  return {d_mu, d_phi};
}

std::pair<double, double> beta_moments(double mu, double phi) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::domain_error("beta moments: mu must lie in (0,1)");
  if (!(phi > 0.0)) throw std::domain_error("beta moments: phi must be positive");
  return {mu, mu * (1.0 - mu) / (1.0 + phi)};
}

double normal_logit_logpdf(double y, double location, double phi, DensityScale scale) {
  if (!(y > 0.0 && y < 1.0)) throw std::domain_error("normal-logit density: y must lie in (0,1)");
  if (!(phi > 0.0 && std::isfinite(phi))) throw std::domain_error("normal-logit density: precision must be positive");
  return normal_logit_raw(y, location, phi, scale);
}

double observation_logdensity(const ObservationTable& table, std::size_t k,
                              std::span<const double> beta, std::span<const double> delta,
                              Family family, DensityScale scale) {
  const double eta = dot(table.mean_covariates(k), beta);
  const double log_phi = -dot(table.precision_covariates(k), delta);
  if (!std::isfinite(eta) || !std::isfinite(log_phi) || log_phi > 700.0) return -kInf;
  const double phi = std::exp(log_phi);
  const double y = table.response(k);
  if (family == Family::beta) return beta_logpdf_raw(y, inv_logit(eta), phi);
  return normal_logit_raw(y, eta, phi, scale);
}

double cell_log_likelihood(const ObservationTable& table, int level, int year,
                           std::span<const double> beta, std::span<const double> delta,
                           Family family, DensityScale scale) {
  const std::size_t begin = table.cell_begin(level, year);
  const std::size_t end = begin + static_cast<std::size_t>(table.schools(level));
  double total = 0.0;
  for (std::size_t k = begin; k < end; ++k)
    total += observation_logdensity(table, k, beta, delta, family, scale);
  return total;
}

double log_likelihood(const ObservationTable& table, const ParameterState& state,
                      const ModelSpec& spec, DensityScale scale) {
  if (state.levels != table.levels() || state.years != table.years() || table.p() != spec.p ||
      table.q() != spec.q)
    throw InputError("parameter state does not match the observation table");
  state.check_dimensions(spec);
  double total = 0.0;
  for (int i = 0; i < table.levels(); ++i)
    for (int t = 0; t < table.years(); ++t)
      total += cell_log_likelihood(table, i, t, state.beta_at(i, t), state.delta_at(i, t),
                                   spec.family, scale);
  return total;
}

double normal_logpdf(double x, double mean, double variance) {
  return -0.5 * (kLogTwoPi + std::log(variance)) - 0.5 * (x - mean) * (x - mean) / variance;
}

double inverse_gamma_logpdf(double x, double shape, double rate) {
  return shape * std::log(rate) - log_gamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double log_prior(const ParameterState& s, const ModelSpec& spec) {
  s.check_dimensions(spec);
  const auto& pr = spec.prior;
  const double a = pr.variance_shape;
  const double c0 = pr.initial_variance;
  auto positive = [](const std::vector<double>& v) {
    for (double x : v)
      if (!(x > 0.0)) throw std::domain_error("log_prior: nonpositive variance");
  };
  positive(s.V_beta);
  positive(s.W_alpha);
  positive(s.V_delta);
  positive(s.W_gamma);

  double lp = 0.0;
  // Mean coefficients around the level-free means, and their random walk.
  for (int i = 0; i < s.levels; ++i)
    for (int t = 0; t < s.years; ++t)
      for (int m = 0; m < s.p; ++m)
        lp += normal_logpdf(s.beta_at(i, t)[m], s.alpha_at(t)[m], s.V_beta_at(i, m));
  for (int m = 0; m < s.p; ++m) {
    double prev = s.alpha0[m];
    for (int t = 0; t < s.years; ++t) {
      lp += normal_logpdf(s.alpha_at(t)[m], prev, s.W_alpha[m]);
      prev = s.alpha_at(t)[m];
    }
    lp += normal_logpdf(s.alpha0[m], pr.initial_mean(pr.alpha_initial_mean, m), c0);
  }

  // Precision coefficients.
  const auto& L = s.layout;
  if (L.hierarchical()) {
    for (int u = 0; u < L.units(); ++u) {
      const int g = L.gamma_slot(u), r = L.variance_row(u);
      for (int k = 0; k < s.q; ++k)
        lp += normal_logpdf(s.delta_unit(u)[k], s.gamma[static_cast<std::size_t>(g) * s.q + k],
                            s.V_delta_at(r, k));
    }
    for (int k = 0; k < s.q; ++k) {
      const double m0 = pr.initial_mean(pr.gamma_initial_mean, k);
      if (L.dynamic()) {
        double prev = s.gamma0[k];
        for (int t = 0; t < s.years; ++t) {
          const double g = s.gamma[static_cast<std::size_t>(t) * s.q + k];
          lp += normal_logpdf(g, prev, s.W_gamma[k]);
          prev = g;
        }
        lp += normal_logpdf(s.gamma0[k], m0, c0);
      } else {
        lp += normal_logpdf(s.gamma[k], m0, c0);
      }
    }
  } else {
    for (int k = 0; k < s.q; ++k)
      lp += normal_logpdf(s.delta[k], pr.initial_mean(pr.gamma_initial_mean, k), c0);
  }

  // Inverse-gamma variance priors.
  for (int i = 0; i < s.levels; ++i)
    for (int m = 0; m < s.p; ++m)
      lp += inverse_gamma_logpdf(s.V_beta_at(i, m), a, pr.variance_rate(pr.beta_variance_mean, m));
  for (int m = 0; m < s.p; ++m)
    lp += inverse_gamma_logpdf(s.W_alpha[m], a, pr.variance_rate(pr.alpha_variance_mean, m));
  for (int r = 0; r < L.variance_rows(); ++r)
    for (int k = 0; k < s.q; ++k)
      lp += inverse_gamma_logpdf(s.V_delta_at(r, k), a, pr.variance_rate(pr.delta_variance_mean, k));
  for (std::size_t k = 0; k < s.W_gamma.size(); ++k)
    lp += inverse_gamma_logpdf(s.W_gamma[k], a, pr.variance_rate(pr.gamma_variance_mean, static_cast<int>(k)));
  return lp;
}

}  // namespace hdbeta
