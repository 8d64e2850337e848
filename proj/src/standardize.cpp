#include "hdbeta/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "hdbeta/error.hpp"

namespace hdbeta {

double boundary_nudge(double y, int group_size) {
  const double n = static_cast<double>(group_size);
  return (y * (n - 1.0) + 0.5) / n;
}

StandardizedScores standardize_scores(const RawScoreTable& raw) {
  if (!(raw.max_score > 0.0)) throw InputError("score ceiling must be positive");

  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < raw.records.size(); ++r) {
    const auto& rec = raw.records[r];
    if (!(rec.score >= 0.0 && rec.score <= raw.max_score)) {
      throw InputError("score " + std::to_string(rec.score) + " outside [0, " +
                       std::to_string(raw.max_score) + "] at level " +
                       std::to_string(rec.index.level + 1) + ", year " +
                       std::to_string(rec.index.year + 1));
    }
    groups[{rec.index.level, rec.index.year}].push_back(r);
  }

  StandardizedScores out;
  out.responses.assign(raw.records.size(), 0.0);
  out.unit_scale.assign(raw.records.size(), 0.0);
  out.summary.max_score = raw.max_score;

  for (const auto& [key, members] : groups) {
    const std::string where =
        "level " + std::to_string(key.first + 1) + ", year " + std::to_string(key.second + 1);
    const auto n = static_cast<int>(members.size());
    if (n < 2) throw InputError("group " + where + " has fewer than two schools");

    double mean = 0.0;
    for (auto r : members) mean += raw.records[r].score;
    mean /= n;
    double ss = 0.0;
    for (auto r : members) ss += (raw.records[r].score - mean) * (raw.records[r].score - mean);
    const double sd = std::sqrt(ss / (n - 1));
    if (!(sd > 0.0)) throw InputError("group " + where + " has zero score variance");

    GroupStatistics g{key.first, key.second, n, mean, sd, (0.0 - mean) / sd,
                      (raw.max_score - mean) / sd};
    // A group touching 0 or max_score is shrunk as a whole, which keeps the
    // ordering of every school in it strict.
    bool touches_boundary = false;
    for (auto r : members) {
      const double w = raw.records[r].score;
      const double z = (w - mean) / sd;
      double y = (z - g.lo) / (g.hi - g.lo);
      if (w <= 0.0) y = 0.0;
      if (w >= raw.max_score) y = 1.0;
      y = std::min(1.0, std::max(0.0, y));
      out.unit_scale[r] = y;
      touches_boundary = touches_boundary || y <= 0.0 || y >= 1.0;
    }
    for (auto r : members) {
      out.responses[r] = touches_boundary ? boundary_nudge(out.unit_scale[r], n) : out.unit_scale[r];
    }
    g.nudged = touches_boundary;
    out.summary.groups.push_back(g);
  }
  return out;
}

}  // namespace hdbeta
