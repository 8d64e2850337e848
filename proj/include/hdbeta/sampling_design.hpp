#pragma once

// Stratified design: Dalenius-Hodges boundaries on a continuous variable,
// certainty strata and seeded stratified simple random sampling.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace hdbeta {

/// Stratum sizes, weights W_h = N_h / N and within-stratum variances S_h^2
/// (n-1 divisor) for a set of values cut at the given boundaries.
struct StrataDefinition {
  std::vector<double> boundaries;
  std::vector<std::size_t> sizes;
  std::vector<double> weights;
  std::vector<double> variances;

  /// Sum over strata of W_h S_h^2.
  double objective() const;
};

/// Stratum of a value: the number of boundaries strictly below it, so a
/// value equal to a boundary belongs to the lower stratum.
int stratum_of(double value, std::span<const double> boundaries);

StrataDefinition describe_strata(std::span<const double> values,
                                 std::span<const double> boundaries);

/// Sum of W_h S_h^2 for the given boundaries.
double stratification_objective(std::span<const double> values,
                                 std::span<const double> boundaries);

/// Cumulative square-root-frequency boundaries on a histogram with `bins`
/// equal-width bins over [min, max].
std::vector<double> cum_sqrt_f_boundaries(std::span<const double> values, int num_strata,
                                          int bins = 100);

/// Cumulative square-root-frequency start followed by coordinate-wise exact
/// refinement of each boundary over the sorted data. The result is never
/// worse than the starting point, and no single boundary can be moved to a
/// neighbouring data gap with a lower objective. Boundaries are midpoints
/// between consecutive distinct values.
std::vector<double> dalenius_hodges_boundaries(std::span<const double> values, int num_strata);

struct PopulationUnit {
  std::string id;
  std::string stratum;
  bool certainty = false;
};

/// All certainty units plus ceil(fraction * N_h) units drawn without
/// replacement from every other stratum. Output keeps population order.
std::vector<PopulationUnit> stratified_sample(const std::vector<PopulationUnit>& population,
                                              double fraction, std::uint64_t seed);

/// Units whose participation covers every requested year.
std::vector<PopulationUnit> retain_panel(
    const std::vector<PopulationUnit>& selected,
    const std::map<std::string, std::set<std::string>>& participation,
    const std::vector<std::string>& years);

}  // namespace hdbeta
