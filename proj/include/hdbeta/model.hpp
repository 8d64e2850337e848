#pragma once

// Hierarchical dynamic beta regression.
//
//   logit(mu_ijt)   =  x_ijt' beta_it,   beta_it  = alpha_t + v_it,   v_it  ~ N(0, V_beta_i)
//                                        alpha_t  = alpha_{t-1} + w_t, w_t   ~ N(0, W_alpha)
//   log(phi_ijt)    = -q_ijt' delta_it,  delta_it = gamma_t + u_it,   u_it  ~ N(0, V_delta_i)
//                                        gamma_t  = gamma_{t-1} + e_t, e_t   ~ N(0, W_gamma)
//   y_ijt | mu, phi ~ Beta(mu phi, (1 - mu) phi)
//
// The precision variants tie delta across levels and/or years:
//   M1  one scalar delta (q = 1)          M2  one q-vector
//   M3  one q-vector per level            M4  one q-vector per year
//   M5  one q-vector per (level, year)
// Tied coefficients are stored once and broadcast on read.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdbeta/panel.hpp"

namespace hdbeta {

enum class PrecisionVariant { M1, M2, M3, M4, M5 };
enum class Family { beta, normal_logit };

/// Scale on which densities of the normal_logit family are reported: the
/// logit scale it is fitted on, or the (0,1) response scale, which adds the
/// log-Jacobian -log(y (1 - y)). The beta family is unaffected.
enum class DensityScale { native, response };

std::string to_string(PrecisionVariant v);
std::string to_string(Family f);
PrecisionVariant parse_variant(const std::string& s);
Family parse_family(const std::string& s);

/// Inverse-gamma priors with shape a (1 < a <= 2, infinite variance) and
/// rate chosen so that the prior mean b / (a - 1) hits the requested value.
/// Per-component means may be given per block; an empty vector means every
/// component uses default_variance_mean.
struct PriorSpec {
  double variance_shape = 2.0;
  double default_variance_mean = 0.1;
  std::vector<double> beta_variance_mean;    // V_beta, length p
  std::vector<double> alpha_variance_mean;   // W_alpha, length p
  std::vector<double> delta_variance_mean;   // V_delta, length q
  std::vector<double> gamma_variance_mean;   // W_gamma, length q
  std::vector<double> alpha_initial_mean;    // m_0 for alpha_0, length p (empty = 0)
  std::vector<double> gamma_initial_mean;    // m_0 for gamma_0, length q (empty = 0)
  double initial_variance = 100.0;           // C_0

  double variance_mean(const std::vector<double>& block, int component) const;
  double variance_rate(const std::vector<double>& block, int component) const;
  double initial_mean(const std::vector<double>& block, int component) const;
  void validate() const;
};

struct ModelSpec {
  PrecisionVariant variant = PrecisionVariant::M5;
  Family family = Family::beta;
  int p = 1;
  int q = 1;
  PriorSpec prior;
  // Column names for ingestion; not needed when working with simulated tables.
  DesignSpec design;

  /// Throws InputError on p < 1, q < 1 or M1 with q != 1.
  void validate() const;
};

/// How delta is tied for a variant on an I x T panel.
///
/// Each delta "unit" is one stored q-vector. Hierarchical variants (M3-M5)
/// centre units on gamma slots with variance V_delta[row]; M4 and M5 also
/// let gamma follow a random walk over years from a gamma_0 node. M1 and M2
/// have no hierarchy: their single delta carries the N(m_0, C_0) prior.
class DeltaLayout {
 public:
  DeltaLayout() = default;
  DeltaLayout(PrecisionVariant variant, int levels, int years);

  PrecisionVariant variant() const { return variant_; }
  int units() const;
  int unit_of(int level, int year) const;
  int level_of_unit(int unit) const;  // -1 when the unit spans levels
  int year_of_unit(int unit) const;   // -1 when the unit spans years
  bool hierarchical() const;          // M3, M4, M5
  bool dynamic() const;               // M4, M5: gamma is a random walk over years
  int variance_rows() const;          // rows of V_delta
  int variance_row(int unit) const;
  int gamma_slots() const;            // T for dynamic, 1 for M3, 0 otherwise
  int gamma_slot(int unit) const;

 private:
  PrecisionVariant variant_ = PrecisionVariant::M5;
  int levels_ = 1;
  int years_ = 1;
};

/// One draw of every parameter. Arrays are row-major in the order given.
struct ParameterState {
  int levels = 0;
  int years = 0;
  int p = 0;
  int q = 0;
  DeltaLayout layout;

  std::vector<double> beta;      // [I][T][p]
  std::vector<double> alpha;     // [T][p]
  std::vector<double> alpha0;    // [p]
  std::vector<double> delta;     // [units][q]
  std::vector<double> gamma;     // [gamma_slots][q]
  std::vector<double> gamma0;    // [q], dynamic layouts only
  std::vector<double> V_beta;    // [I][p]
  std::vector<double> W_alpha;   // [p]
  std::vector<double> V_delta;   // [variance_rows][q]
  std::vector<double> W_gamma;   // [q], dynamic layouts only

  /// Zero coefficients, variances at their prior means.
  static ParameterState initial(int levels, int years, const ModelSpec& spec);

  std::span<double> beta_at(int i, int t) { return {beta.data() + (static_cast<std::size_t>(i) * years + t) * p, static_cast<std::size_t>(p)}; }
  std::span<const double> beta_at(int i, int t) const { return {beta.data() + (static_cast<std::size_t>(i) * years + t) * p, static_cast<std::size_t>(p)}; }
  std::span<double> alpha_at(int t) { return {alpha.data() + static_cast<std::size_t>(t) * p, static_cast<std::size_t>(p)}; }
  std::span<const double> alpha_at(int t) const { return {alpha.data() + static_cast<std::size_t>(t) * p, static_cast<std::size_t>(p)}; }
  std::span<double> delta_unit(int u) { return {delta.data() + static_cast<std::size_t>(u) * q, static_cast<std::size_t>(q)}; }
  std::span<const double> delta_unit(int u) const { return {delta.data() + static_cast<std::size_t>(u) * q, static_cast<std::size_t>(q)}; }
  /// Broadcast read of the delta governing cell (i, t).
  std::span<const double> delta_at(int i, int t) const { return delta_unit(layout.unit_of(i, t)); }
  /// Overall precision mean for year t: gamma_t for dynamic layouts, the
  /// static gamma for M3, and delta itself for M1/M2.
  std::span<const double> gamma_at(int t) const;

  double V_beta_at(int i, int m) const { return V_beta[static_cast<std::size_t>(i) * p + m]; }
  double V_delta_at(int row, int k) const { return V_delta[static_cast<std::size_t>(row) * q + k]; }

  /// Flat parameter names such as "beta[i=2,t=5,m=3]" (one-based), in a
  /// fixed order matching values().
  std::vector<std::string> names() const;
  std::vector<double> values() const;
  /// Inverse of values(); the state's dimensions must already be set.
  void assign(std::span<const double> flat);

  /// Throws InputError if dimensions disagree with (levels, years, spec).
  void check_dimensions(const ModelSpec& spec) const;
};

/// Re-expresses a state under a finer variant by broadcasting tied deltas.
/// Supported moves follow M1 -> M2 -> {M3, M4} -> M5 (any chain of them).
/// Variance entries the coarser variant lacks are set to the prior mean.
ParameterState embed_state(const ParameterState& state, PrecisionVariant finer,
                           const ModelSpec& finer_spec);

/// Logistic function, kept strictly inside (0,1) for any finite input.
double inverse_logit(double eta);

/// Inverse logit of x'beta, kept strictly inside (0,1).
double mean_link(std::span<const double> x, std::span<const double> beta);
/// exp(-q'delta).
double precision_link(std::span<const double> qvec, std::span<const double> delta);

double log_gamma(double x);
double digamma(double x);

/// log Beta(y; mu phi, (1 - mu) phi). Throws std::domain_error off-support.
double beta_logpdf(double y, double mu, double phi);
/// Partial derivatives of beta_logpdf with respect to (mu, phi).
std::pair<double, double> beta_logpdf_gradient(double y, double mu, double phi);
/// (mean, variance) = (mu, mu (1 - mu) / (1 + phi)).
std::pair<double, double> beta_moments(double mu, double phi);

/// Gaussian log-density of logit(y) with mean `location` and precision phi;
/// on DensityScale::response the log-Jacobian of the logit is added.
double normal_logit_logpdf(double y, double location, double phi,
                           DensityScale scale = DensityScale::native);

/// Log-density of one record under the given coefficients. Returns -inf
/// instead of throwing when the linear predictors leave the support, which
/// is what samplers need for rejected proposals.
double observation_logdensity(const ObservationTable& table, std::size_t k,
                              std::span<const double> beta, std::span<const double> delta,
                              Family family, DensityScale scale = DensityScale::native);

/// Sum of observation_logdensity over the schools of cell (i, t).
double cell_log_likelihood(const ObservationTable& table, int level, int year,
                           std::span<const double> beta, std::span<const double> delta,
                           Family family, DensityScale scale = DensityScale::native);

double log_likelihood(const ObservationTable& table, const ParameterState& state,
                      const ModelSpec& spec, DensityScale scale = DensityScale::native);

/// Log-density of the hierarchical prior, including the alpha_0 / gamma_0
/// nodes and the inverse-gamma variance priors. Tied delta blocks are
/// counted once.
double log_prior(const ParameterState& state, const ModelSpec& spec);

double normal_logpdf(double x, double mean, double variance);
double inverse_gamma_logpdf(double x, double shape, double rate);

}  // namespace hdbeta
