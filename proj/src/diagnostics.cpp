#include "hdbeta/diagnostics.hpp"

#include <cmath>
#include <numeric>

#include "hdbeta/error.hpp"

namespace hdbeta {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

std::optional<double> effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double m = mean_of(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  c0 /= n;
  if (!(c0 > 0.0) || c0 < 1e-300) return std::nullopt;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) s += (x[k] - m) * (x[k + lag] - m);
    return s / n;
  };
  // Sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive, enforcing
  // a monotone sequence.
  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum += pair;
    prev_pair = pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1.0 / std::log10(static_cast<double>(n) + 10.0));
  return static_cast<double>(n) / tau;
}

std::optional<double> geweke_z(std::span<const double> x, double first, double last) {
  const auto n = x.size();
  const auto na = static_cast<std::size_t>(std::floor(first * n));
  const auto nb = static_cast<std::size_t>(std::floor(last * n));
  if (na < 2 || nb < 2) return std::nullopt;
  auto a = x.subspan(0, na);
  auto b = x.subspan(n - nb, nb);
  auto ess_a = effective_sample_size(a);
  auto ess_b = effective_sample_size(b);
  if (!ess_a || !ess_b) return std::nullopt;
  const double se2 = variance_of(a) / *ess_a + variance_of(b) / *ess_b;
  return (mean_of(a) - mean_of(b)) / std::sqrt(se2);
}

std::optional<double> potential_scale_reduction(const std::vector<std::span<const double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) return std::nullopt;
  const std::size_t n = chains.front().size();
  if (n < 2) return std::nullopt;
  for (const auto& c : chains)
    if (c.size() != n) throw InputError("chains must have equal length");
  std::vector<double> means(m);
  double within = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    within += variance_of(chains[c]);
  }
  within /= m;
  if (!(within > 0.0)) return std::nullopt;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= static_cast<double>(n) / (m - 1);
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

std::vector<ParameterDiagnostics> diagnose(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw InputError("no chains to diagnose");
  const std::size_t L = chains.front().size();
  if (L < 10) throw InputError("diagnostics need at least 10 stored draws");
  for (const auto& c : chains)
    if (c.size() != L) throw InputError("chains differ in length");

  const auto names = chains.front().draws.front().names();
  // traces[chain][parameter][draw]
  std::vector<std::vector<std::vector<double>>> traces(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    traces[c].assign(names.size(), std::vector<double>(L));
    for (std::size_t l = 0; l < L; ++l) {
      const auto v = chains[c].draws[l].values();
      for (std::size_t k = 0; k < names.size(); ++k) traces[c][k][l] = v[k];
    }
  }

  std::vector<ParameterDiagnostics> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    ParameterDiagnostics d;
    d.name = names[k];
    std::vector<double> pooled;
    std::vector<std::span<const double>> spans;
    double ess_total = 0.0;
    bool degenerate = false;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const auto& tr = traces[c][k];
      pooled.insert(pooled.end(), tr.begin(), tr.end());
      spans.emplace_back(tr);
      auto e = effective_sample_size(tr);
      if (!e) degenerate = true;
      else ess_total += *e;
    }
    d.mean = mean_of(pooled);
    d.sd = std::sqrt(variance_of(pooled));
    if (!degenerate) d.ess = ess_total;
    d.geweke = geweke_z(traces[0][k]);
    d.psrf = potential_scale_reduction(spans);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace hdbeta
