#include "hdbeta/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "hdbeta/csv.hpp"
#include "hdbeta/error.hpp"

namespace hdbeta {

namespace {

std::vector<const ParameterState*> pooled_draws(const std::vector<ChainOutput>& chains) {
  std::vector<const ParameterState*> out;
  for (const auto& c : chains)
    for (const auto& d : c.draws) out.push_back(&d);
  return out;
}

bool is_variance(const std::string& name) {
  return name.rfind("V_", 0) == 0 || name.rfind("W_", 0) == 0;
}

struct Predictive {
  double location;  // mu for beta, logit-scale mean for normal_logit
  double phi;
};

Predictive predictive_at(const ObservationTable& table, const ParameterState& s, std::size_t k) {
  const auto idx = table.index(k);
  auto beta = s.beta_at(idx.level, idx.year);
  auto delta = s.delta_at(idx.level, idx.year);
  auto x = table.mean_covariates(k);
  auto qv = table.precision_covariates(k);
  double eta = 0.0, lp = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) eta += x[m] * beta[m];
  for (std::size_t c = 0; c < qv.size(); ++c) lp -= qv[c] * delta[c];
  return {eta, std::exp(lp)};
}

}  // namespace

DicResult dic_from(std::span<const double> deviances, double d_at_mean) {
  if (deviances.empty()) throw InputError("DIC needs at least one stored deviance");
  DicResult r;
  r.d_bar = std::accumulate(deviances.begin(), deviances.end(), 0.0) / deviances.size();
  r.d_at_mean = d_at_mean;
  r.p_d = r.d_bar - r.d_at_mean;
  r.dic = r.d_bar + r.p_d;
  return r;
}

ParameterState posterior_mean(const std::vector<ChainOutput>& chains) {
  auto draws = pooled_draws(chains);
  if (draws.empty()) throw InputError("no stored draws");
  ParameterState mean = *draws.front();
  const auto names = mean.names();
  std::vector<double> acc(names.size(), 0.0);
  for (const auto* d : draws) {
    const auto v = d->values();
    for (std::size_t k = 0; k < v.size(); ++k) acc[k] += is_variance(names[k]) ? std::log(v[k]) : v[k];
  }
  for (std::size_t k = 0; k < acc.size(); ++k) {
    acc[k] /= static_cast<double>(draws.size());
    if (is_variance(names[k])) acc[k] = std::exp(acc[k]);
  }
  mean.assign(acc);
  return mean;
}

DicResult dic(const std::vector<ChainOutput>& chains, const ObservationTable& table,
              const ModelSpec& spec, DensityScale scale) {
  std::vector<double> deviances;
  const bool recompute = spec.family == Family::normal_logit && scale == DensityScale::response;
  for (const auto& c : chains) {
    if (recompute) {
      for (const auto& d : c.draws) deviances.push_back(-2.0 * log_likelihood(table, d, spec, scale));
    } else {
      deviances.insert(deviances.end(), c.deviances.begin(), c.deviances.end());
    }
  }
  if (deviances.size() < 2) throw InputError("DIC needs at least two stored draws");
  const double d_hat = -2.0 * log_likelihood(table, posterior_mean(chains), spec, scale);
  return dic_from(deviances, d_hat);
}

ReplicateStore replicate(const std::vector<ChainOutput>& chains, const ObservationTable& table,
                         const ModelSpec& spec, int reps_per_draw, std::uint64_t seed,
                         DensityScale scale) {
  auto draws = pooled_draws(chains);
  if (draws.empty()) throw InputError("replication needs at least one stored draw");
  if (reps_per_draw < 1) throw InputError("reps_per_draw must be positive");
  ReplicateStore store;
  store.observations = table.size();
  store.per_observation = draws.size() * static_cast<std::size_t>(reps_per_draw);
  store.primary.resize(store.observations * store.per_observation);
  store.secondary.resize(store.observations * store.per_observation);

  for (std::size_t k = 0; k < table.size(); ++k) {
    Rng rng = make_rng(seed, "replicate", k);
    std::size_t slot = k * store.per_observation;
    for (const auto* d : draws) {
      const auto pred = predictive_at(table, *d, k);
      for (int r = 0; r < reps_per_draw; ++r) {
        for (auto* stream : {&store.primary, &store.secondary}) {
          double v;
          if (spec.family == Family::beta) {
            const double mu = inverse_logit(pred.location);
            v = beta_variate(mu * pred.phi, (1.0 - mu) * pred.phi, rng);
          } else {
            v = pred.location + standard_normal(rng) / std::sqrt(pred.phi);
            if (scale == DensityScale::response) v = inverse_logit(v);
          }
          (*stream)[slot] = v;
        }
        ++slot;
      }
    }
  }
  return store;
}

RpsEstimate rps(const ReplicateStore& rep, std::span<const double> observed) {
  if (rep.per_observation < 2) throw InputError("RPS needs at least two replicates per observation");
  if (observed.size() != rep.observations) throw InputError("observed values do not match replicates");
  const std::size_t n = rep.observations, R = rep.per_observation;
  if (n == 0) throw InputError("RPS needs at least one observation");
  // Per-replicate-index contribution averaged over observations, for the
  // Monte Carlo standard error.
  std::vector<double> per_rep(R, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto a = rep.primary_of(k);
    auto b = rep.secondary_of(k);
    for (std::size_t l = 0; l < R; ++l)
      per_rep[l] += std::abs(a[l] - observed[k]) - 0.5 * std::abs(a[l] - b[l]);
  }
  for (auto& v : per_rep) v /= static_cast<double>(n);
  const double mean = std::accumulate(per_rep.begin(), per_rep.end(), 0.0) / R;
  double ss = 0.0;
  for (double v : per_rep) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (R - 1) / R)};
}

double log_mean_exp(std::span<const double> v) {
  if (v.empty()) throw InputError("log_mean_exp of an empty set");
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s) - std::log(static_cast<double>(v.size()));
}

double logs(const std::vector<ChainOutput>& chains, const ObservationTable& table,
            const ModelSpec& spec, DensityScale scale) {
  auto draws = pooled_draws(chains);
  if (draws.empty()) throw InputError("LogS needs at least one stored draw");
  if (table.size() == 0) throw InputError("LogS needs at least one observation");
  std::vector<double> lp(draws.size());
  double total = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto idx = table.index(k);
    for (std::size_t l = 0; l < draws.size(); ++l)
      lp[l] = observation_logdensity(table, k, draws[l]->beta_at(idx.level, idx.year),
                                     draws[l]->delta_at(idx.level, idx.year), spec.family, scale);
    total -= log_mean_exp(lp);
  }
  return total / static_cast<double>(table.size());
}

double sorted_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw InputError("quantile of an empty set");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<PredictiveRecord> predictive_summary(const ReplicateStore& rep,
                                                 std::span<const double> observed) {
  if (2 * rep.per_observation < 40) throw InputError("predictive summary needs at least 40 replicates");
  if (observed.size() != rep.observations) throw InputError("observed values do not match replicates");
  std::vector<PredictiveRecord> out;
  std::vector<double> pool;
  for (std::size_t k = 0; k < rep.observations; ++k) {
    auto a = rep.primary_of(k);
    auto b = rep.secondary_of(k);
    pool.assign(a.begin(), a.end());
    pool.insert(pool.end(), b.begin(), b.end());
    std::sort(pool.begin(), pool.end());
    PredictiveRecord r;
    r.observation = k;
    r.observed = observed[k];
    r.mean = std::accumulate(pool.begin(), pool.end(), 0.0) / pool.size();
    r.lower = sorted_quantile(pool, 0.025);
    r.upper = sorted_quantile(pool, 0.975);
    // Keep the summary ordered when rounding pushes the mean past a bound.
    r.mean = std::clamp(r.mean, r.lower, r.upper);
    r.outside = r.observed < r.lower || r.observed > r.upper;
    out.push_back(r);
  }
  return out;
}

std::vector<ScoreReport> score_model(const std::vector<ChainOutput>& chains,
                                     const ObservationTable& table, const ModelSpec& spec,
                                     const std::string& label, std::uint64_t seed,
                                     int reps_per_draw) {
  std::vector<DensityScale> scales{DensityScale::native};
  if (spec.family == Family::normal_logit) scales.push_back(DensityScale::response);
  std::vector<ScoreReport> out;
  for (auto scale : scales) {
    ScoreReport r;
    r.model_label = label;
    if (spec.family == Family::normal_logit)
      r.model_label += scale == DensityScale::native ? " (logit scale)" : " (y scale)";
    const auto d = dic(chains, table, spec, scale);
    r.d_bar = d.d_bar;
    r.d_at_mean = d.d_at_mean;
    r.p_d = d.p_d;
    r.dic = d.dic;
    const auto store = replicate(chains, table, spec, reps_per_draw, seed, scale);
    std::vector<double> observed(table.responses().begin(), table.responses().end());
    if (scale == DensityScale::native && spec.family == Family::normal_logit)
      for (auto& y : observed) y = std::log(y) - std::log1p(-y);
    const auto rp = rps(store, observed);
    r.rps = rp.value;
    r.rps_se = rp.standard_error;
    r.logs = logs(chains, table, spec, scale);
    out.push_back(r);
  }
  return out;
}

namespace {

struct Best {
  std::size_t dic = 0, rps = 0, logs = 0;
};

Best find_best(const std::vector<ScoreReport>& reports) {
  Best b;
  for (std::size_t r = 1; r < reports.size(); ++r) {
    if (reports[r].dic < reports[b.dic].dic) b.dic = r;
    if (reports[r].rps < reports[b.rps].rps) b.rps = r;
    if (reports[r].logs < reports[b.logs].logs) b.logs = r;
  }
  return b;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string comparison_text(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) return {};
  const Best best = find_best(reports);
  std::vector<std::vector<std::string>> rows{{"Model", "D_bar", "p_D", "DIC", "RPS", "LogS"}};
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& s = reports[r];
    rows.push_back({s.model_label, fixed(s.d_bar, 2), fixed(s.p_d, 2),
                    fixed(s.dic, 2) + (r == best.dic ? " *" : ""),
                    fixed(s.rps, 5) + (r == best.rps ? " *" : ""),
                    fixed(s.logs, 2) + (r == best.logs ? " *" : "")});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  }
  out << "(* best under the criterion: smallest value)\n";
  return out.str();
}

std::string comparison_csv(const std::vector<ScoreReport>& reports) {
  std::ostringstream out;
  write_csv_row(out, {"model", "d_bar", "p_d", "dic", "rps", "rps_se", "logs", "best_dic",
                      "best_rps", "best_logs"});
  if (reports.empty()) return out.str();
  const Best best = find_best(reports);
  for (std::size_t r = 0; r < reports.size(); ++r) {
    const auto& s = reports[r];
    write_csv_row(out, {s.model_label, format_double(s.d_bar), format_double(s.p_d),
                        format_double(s.dic), format_double(s.rps), format_double(s.rps_se),
                        format_double(s.logs), r == best.dic ? "1" : "0",
                        r == best.rps ? "1" : "0", r == best.logs ? "1" : "0"});
  }
  return out.str();
}

}  // namespace hdbeta
