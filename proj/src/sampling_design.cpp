#include "hdbeta/sampling_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hdbeta/error.hpp"
#include "hdbeta/rng.hpp"

namespace hdbeta {

double StrataDefinition::objective() const {
  double total = 0.0;
  for (std::size_t h = 0; h < weights.size(); ++h) total += weights[h] * variances[h];
  return total;
}

int stratum_of(double value, std::span<const double> boundaries) {
  return static_cast<int>(std::lower_bound(boundaries.begin(), boundaries.end(), value) -
                          boundaries.begin());
}

StrataDefinition describe_strata(std::span<const double> values,
                                 std::span<const double> boundaries) {
  if (values.empty()) throw InputError("no values to stratify");
  const std::size_t strata = boundaries.size() + 1;
  StrataDefinition def;
  def.boundaries.assign(boundaries.begin(), boundaries.end());
  std::vector<double> sum(strata, 0.0), sumsq(strata, 0.0);
  def.sizes.assign(strata, 0);
  // Shift by the overall mean to keep the sums of squares well conditioned.
  const double centre = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  for (double v : values) {
    auto h = static_cast<std::size_t>(stratum_of(v, boundaries));
    def.sizes[h] += 1;
    sum[h] += v - centre;
    sumsq[h] += (v - centre) * (v - centre);
  }
  const double n = static_cast<double>(values.size());
  for (std::size_t h = 0; h < strata; ++h) {
    const double nh = static_cast<double>(def.sizes[h]);
    def.weights.push_back(nh / n);
    def.variances.push_back(nh > 1 ? std::max(0.0, (sumsq[h] - sum[h] * sum[h] / nh) / (nh - 1)) : 0.0);
  }
  return def;
}

double stratification_objective(std::span<const double> values,
                                std::span<const double> boundaries) {
  return describe_strata(values, boundaries).objective();
}

std::vector<double> cum_sqrt_f_boundaries(std::span<const double> values, int num_strata,
                                          int bins) {
  if (num_strata < 2) throw InputError("need at least two strata");
  if (values.empty()) throw InputError("no values to stratify");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw InputError("cannot stratify a constant variable");
  const double width = (hi - lo) / bins;

  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    counts[b] += 1.0;
  }
  std::vector<double> cum(bins);
  double running = 0.0;
  for (int b = 0; b < bins; ++b) {
    running += std::sqrt(counts[b]);
    cum[b] = running;
  }
  std::vector<double> out;
  for (int h = 1; h < num_strata; ++h) {
    const double target = running * h / num_strata;
    // Bin edge whose cumulative sqrt-frequency is closest to the target.
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins - 1; ++b) {
      double gap = std::abs(cum[b] - target);
      if (gap < best_gap) {
        best_gap = gap;
        best = b;
      }
    }
    out.push_back(lo + width * (best + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Sorted data with prefix sums; a cut c separates positions [0, c) from [c, n).
class SortedData {
 public:
  explicit SortedData(std::span<const double> values) : x_(values.begin(), values.end()) {
    std::sort(x_.begin(), x_.end());
    const double centre = x_[x_.size() / 2];
    s1_.assign(x_.size() + 1, 0.0);
    s2_.assign(x_.size() + 1, 0.0);
    for (std::size_t k = 0; k < x_.size(); ++k) {
      const double d = x_[k] - centre;
      s1_[k + 1] = s1_[k] + d;
      s2_[k + 1] = s2_[k] + d * d;
    }
  }

  std::size_t size() const { return x_.size(); }
  double at(std::size_t k) const { return x_[k]; }

  // W_h S_h^2 for positions [a, b).
  double term(std::size_t a, std::size_t b) const {
    const double nh = static_cast<double>(b - a);
    if (nh < 2) return 0.0;
    const double s1 = s1_[b] - s1_[a];
    const double s2 = s2_[b] - s2_[a];
    return (nh / x_.size()) * std::max(0.0, (s2 - s1 * s1 / nh) / (nh - 1));
  }

  double objective(const std::vector<std::size_t>& cuts) const {
    double total = 0.0;
    std::size_t prev = 0;
    for (auto c : cuts) {
      total += term(prev, c);
      prev = c;
    }
    return total + term(prev, x_.size());
  }

  // Valid cut: strictly between two distinct values.
  bool valid_cut(std::size_t c) const { return c > 0 && c < x_.size() && x_[c - 1] < x_[c]; }

  // Position of the first value strictly greater than v.
  std::size_t cut_above(double v) const {
    return static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), v) - x_.begin());
  }

  double boundary(std::size_t c) const { return 0.5 * (x_[c - 1] + x_[c]); }

 private:
  std::vector<double> x_;
  std::vector<double> s1_, s2_;
};

}  // namespace

std::vector<double> dalenius_hodges_boundaries(std::span<const double> values, int num_strata) {
  if (num_strata < 2) throw InputError("need at least two strata");
  SortedData data(values);
  std::size_t distinct = data.size() ? 1 : 0;
  for (std::size_t k = 1; k < data.size(); ++k) distinct += data.at(k) > data.at(k - 1);
  if (distinct < static_cast<std::size_t>(num_strata))
    throw InputError("fewer distinct values than strata");

  // Starting cuts from the histogram rule, repaired so that they are valid
  // and strictly increasing.
  auto start = cum_sqrt_f_boundaries(values, num_strata);
  std::vector<std::size_t> cuts;
  for (double b : start) cuts.push_back(data.cut_above(b));
  std::vector<std::size_t> valid;
  for (std::size_t c = 1; c < data.size(); ++c)
    if (data.valid_cut(c)) valid.push_back(c);
  for (std::size_t h = 0; h < cuts.size(); ++h) {
    auto it = std::lower_bound(valid.begin(), valid.end(), cuts[h]);
    if (it == valid.end()) --it;
    std::size_t idx = static_cast<std::size_t>(it - valid.begin());
    const std::size_t lo_idx = h;                                  // room for cuts below
    const std::size_t hi_idx = valid.size() - cuts.size() + h;      // room for cuts above
    idx = std::clamp(idx, lo_idx, hi_idx);
    if (h > 0) {
      auto prev = static_cast<std::size_t>(
          std::lower_bound(valid.begin(), valid.end(), cuts[h - 1]) - valid.begin());
      idx = std::max(idx, prev + 1);
    }
    cuts[h] = valid[idx];
  }
  const double start_objective = data.objective(cuts);

  // Coordinate descent: place each cut at its exact optimum between its
  // neighbours, until a full pass changes nothing.
  for (int pass = 0; pass < 1000; ++pass) {
    bool changed = false;
    for (std::size_t h = 0; h < cuts.size(); ++h) {
      const std::size_t left = h == 0 ? 0 : cuts[h - 1];
      const std::size_t right = h + 1 == cuts.size() ? data.size() : cuts[h + 1];
      auto lo = std::upper_bound(valid.begin(), valid.end(), left);
      auto hi = std::lower_bound(valid.begin(), valid.end(), right);
      std::size_t best = cuts[h];
      double best_value = data.term(left, best) + data.term(best, right);
      for (auto it = lo; it != hi; ++it) {
        const double v = data.term(left, *it) + data.term(*it, right);
        if (v < best_value - 1e-15 * std::abs(best_value)) {
          best_value = v;
          best = *it;
        }
      }
      if (best != cuts[h]) {
        cuts[h] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  if (data.objective(cuts) > start_objective * (1 + 1e-12) + 1e-300)
    throw std::logic_error("boundary refinement increased the objective");

  std::vector<double> out;
  for (auto c : cuts) out.push_back(data.boundary(c));
  return out;
}

std::vector<PopulationUnit> stratified_sample(const std::vector<PopulationUnit>& population,
                                              double fraction, std::uint64_t seed) {
  if (population.empty()) throw InputError("empty population");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("sampling fraction must be in (0,1]");

  std::map<std::string, std::vector<std::size_t>> strata;
  std::vector<char> chosen(population.size(), 0);
  for (std::size_t u = 0; u < population.size(); ++u) {
    if (population[u].certainty) {
      chosen[u] = 1;
    } else {
      strata[population[u].stratum].push_back(u);
    }
  }
  for (auto& [label, members] : strata) {
    const double target = fraction * static_cast<double>(members.size());
    // Guard against 0.2 * 100 landing a hair above 20.
    auto take = static_cast<std::size_t>(std::ceil(target - 1e-9));
    take = std::clamp<std::size_t>(take, 1, members.size());
    Rng rng = make_rng(seed, "stratum:" + label);
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < take; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, members.size() - 1);
      std::swap(members[k], members[pick(rng)]);
      chosen[members[k]] = 1;
    }
  }
  std::vector<PopulationUnit> out;
  for (std::size_t u = 0; u < population.size(); ++u)
    if (chosen[u]) out.push_back(population[u]);
  return out;
}

std::vector<PopulationUnit> retain_panel(
    const std::vector<PopulationUnit>& selected,
    const std::map<std::string, std::set<std::string>>& participation,
    const std::vector<std::string>& years) {
  std::vector<PopulationUnit> out;
  for (const auto& unit : selected) {
    auto it = participation.find(unit.id);
    bool keep = std::all_of(years.begin(), years.end(), [&](const std::string& y) {
      return it != participation.end() && it->second.count(y) > 0;
    });
    if (keep) out.push_back(unit);
  }
  return out;
}

}  // namespace hdbeta
