#pragma once

// Maps raw bounded average scores W in [0, s_max] onto (0,1) responses by
// centring and scaling within each (level, year) group and then rescaling the
// group's attainable range [0, s_max] onto the unit interval.

#include <string>
#include <vector>

#include "hdbeta/panel.hpp"

namespace hdbeta {

struct RawScore {
  PanelIndex index;
  double score = 0.0;
};

struct RawScoreTable {
  std::vector<RawScore> records;
  double max_score = 120.0;
};

struct GroupStatistics {
  int level = 0;
  int year = 0;
  int size = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample (n-1) standard deviation
  double lo = 0.0;  // (0 - mean) / sd
  double hi = 0.0;  // (max_score - mean) / sd
  bool nudged = false;
};

struct StandardizationSummary {
  double max_score = 120.0;
  std::vector<GroupStatistics> groups;  // sorted by (level, year)
};

struct StandardizedScores {
  std::vector<double> responses;   // parallel to RawScoreTable::records, in (0,1)
  std::vector<double> unit_scale;  // before boundary handling, in [0,1]
  StandardizationSummary summary;
};

/// Shrinks y in [0,1] toward 1/2: (y (n - 1) + 1/2) / n.
double boundary_nudge(double y, int group_size);

/// Groups containing a score of exactly 0 or max_score are passed through
/// boundary_nudge as a whole (with n = group size); other groups are left
/// untouched.
///
/// Throws InputError if a group has fewer than two schools, zero score
/// variance, or a score outside [0, max_score].
StandardizedScores standardize_scores(const RawScoreTable& raw);

}  // namespace hdbeta
