#include "hdbeta/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "hdbeta/csv.hpp"
#include "hdbeta/error.hpp"

namespace hdbeta {

std::size_t PanelShape::observations() const {
  std::size_t n = 0;
  for (int s : schools_per_level) n += static_cast<std::size_t>(s);
  return n * static_cast<std::size_t>(years);
}

PanelLabels PanelLabels::numbered(const PanelShape& shape) {
  PanelLabels labels;
  for (int i = 0; i < shape.levels(); ++i) {
    labels.levels.push_back(std::to_string(i + 1));
    std::vector<std::string> ids;
    for (int j = 0; j < shape.schools_per_level[i]; ++j)
      ids.push_back("L" + std::to_string(i + 1) + "S" + std::to_string(j + 1));
    labels.schools.push_back(std::move(ids));
  }
  for (int t = 0; t < shape.years; ++t) labels.years.push_back(std::to_string(t + 1));
  return labels;
}

ObservationTable::ObservationTable(PanelShape shape, PanelLabels labels,
                                   std::vector<std::string> mean_names,
                                   std::vector<std::string> precision_names,
                                   std::vector<double> y, std::vector<double> x,
                                   std::vector<double> q)
    : shape_(std::move(shape)),
      labels_(std::move(labels)),
      mean_names_(std::move(mean_names)),
      precision_names_(std::move(precision_names)),
      y_(std::move(y)),
      xcov_(std::move(x)),
      qcov_(std::move(q)),
      p_(static_cast<int>(mean_names_.size())),
      q_(static_cast<int>(precision_names_.size())) {
  if (shape_.levels() < 1 || shape_.years < 1)
    throw InputError("panel needs at least one level and one year");
  for (int n : shape_.schools_per_level)
    if (n < 0) throw InputError("negative school count");
  if (p_ < 1 || q_ < 1) throw InputError("design needs at least an intercept for mean and precision");
  const std::size_t n = shape_.observations();
  if (y_.size() != n || xcov_.size() != n * p_ || qcov_.size() != n * q_)
    throw InputError("observation table arrays do not match the panel shape");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(y_[k] > 0.0 && y_[k] < 1.0)) {
      auto idx = index(k);
      throw InputError("response outside (0,1) at level " + std::to_string(idx.level + 1) +
                       ", school " + std::to_string(idx.school + 1) + ", year " +
                       std::to_string(idx.year + 1));
    }
  }
  level_start_.resize(shape_.levels() + 1, 0);
  for (int i = 0; i < shape_.levels(); ++i)
    level_start_[i + 1] =
        level_start_[i] + static_cast<std::size_t>(shape_.schools_per_level[i]) * shape_.years;
  if (labels_.levels.empty()) labels_ = PanelLabels::numbered(shape_);
}

std::size_t ObservationTable::offset(const PanelIndex& idx) const {
  return level_start_[idx.level] +
         static_cast<std::size_t>(idx.year) * shape_.schools_per_level[idx.level] + idx.school;
}

PanelIndex ObservationTable::index(std::size_t k) const {
  int i = 0;
  std::size_t start = 0;
  for (; i < shape_.levels(); ++i) {
    std::size_t len = static_cast<std::size_t>(shape_.schools_per_level[i]) * shape_.years;
    if (k < start + len) break;
    start += len;
  }
  const auto n = static_cast<std::size_t>(shape_.schools_per_level[i]);
  const std::size_t r = k - start;
  return {i, static_cast<int>(r % n), static_cast<int>(r / n)};
}

std::span<const double> ObservationTable::mean_covariates(std::size_t k) const {
  return {xcov_.data() + k * p_, static_cast<std::size_t>(p_)};
}

std::span<const double> ObservationTable::precision_covariates(std::size_t k) const {
  return {qcov_.data() + k * q_, static_cast<std::size_t>(q_)};
}

std::size_t ObservationTable::cell_begin(int level, int year) const {
  return level_start_[level] + static_cast<std::size_t>(year) * shape_.schools_per_level[level];
}

ObservationTable select_precision_covariates(const ObservationTable& table,
                                             const std::vector<std::string>& keep) {
  std::vector<int> columns{0};
  std::vector<std::string> names{"intercept"};
  for (const auto& name : keep) {
    const auto& all = table.precision_names();
    auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw InputError("unknown precision covariate '" + name + "'");
    columns.push_back(static_cast<int>(it - all.begin()));
    names.push_back(name);
  }
  std::vector<double> x, q, y(table.responses().begin(), table.responses().end());
  for (std::size_t k = 0; k < table.size(); ++k) {
    auto xs = table.mean_covariates(k);
    x.insert(x.end(), xs.begin(), xs.end());
    auto qs = table.precision_covariates(k);
    for (int c : columns) q.push_back(qs[c]);
  }
  return ObservationTable(table.shape(), table.labels(), table.mean_names(), std::move(names),
                          std::move(y), std::move(x), std::move(q));
}

std::vector<double> covariate_standardize(std::span<const double> values) {
  if (values.size() < 2) throw InputError("standardization needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw InputError("cannot standardize a constant covariate");
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = (values[k] - mean) / sd;
  return out;
}

namespace {

// Numeric labels sort by value, anything else lexicographically.
std::vector<std::string> ordered_labels(std::set<std::string> labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  bool numeric = true;
  for (const auto& s : out) {
    try {
      parse_double(s, "label");
    } catch (const InputError&) {
      numeric = false;
      break;
    }
  }
  if (numeric) {
    std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return parse_double(a, "label") < parse_double(b, "label");
    });
  }
  return out;
}

int position(const std::vector<std::string>& v, const std::string& s) {
  return static_cast<int>(std::find(v.begin(), v.end(), s) - v.begin());
}

}  // namespace

ObservationTable build_table(const std::vector<RawRecord>& records, const DesignSpec& design) {
  if (records.empty()) throw InputError("no records");

  std::set<std::string> level_set, year_set;
  std::map<std::string, std::set<std::string>> schools_by_level;
  for (const auto& r : records) {
    level_set.insert(r.level);
    year_set.insert(r.year);
    schools_by_level[r.level].insert(r.school);
  }

  PanelLabels labels;
  labels.levels = ordered_labels(level_set);
  labels.years = ordered_labels(year_set);
  PanelShape shape;
  shape.years = static_cast<int>(labels.years.size());
  for (const auto& lvl : labels.levels) {
    const auto& ids = schools_by_level[lvl];
    labels.schools.emplace_back(ids.begin(), ids.end());
    shape.schools_per_level.push_back(static_cast<int>(ids.size()));
  }

  for (const auto* names : {&design.mean_covariates, &design.precision_covariates}) {
    for (const auto& name : *names) {
      for (const auto& r : records) {
        if (!r.covariates.count(name)) throw InputError("unknown covariate '" + name + "'");
      }
    }
  }
  for (const auto& name : design.standardize) {
    bool used = std::count(design.mean_covariates.begin(), design.mean_covariates.end(), name) ||
                std::count(design.precision_covariates.begin(), design.precision_covariates.end(), name);
    if (!used) throw InputError("standardized covariate '" + name + "' is not in the design");
  }

  const std::size_t n = shape.observations();
  std::vector<const RawRecord*> slot(n, nullptr);
  std::vector<std::size_t> level_start(shape.levels() + 1, 0);
  for (int i = 0; i < shape.levels(); ++i)
    level_start[i + 1] = level_start[i] + static_cast<std::size_t>(shape.schools_per_level[i]) * shape.years;

  for (const auto& r : records) {
    int i = position(labels.levels, r.level);
    int t = position(labels.years, r.year);
    int j = position(labels.schools[i], r.school);
    std::size_t k = level_start[i] + static_cast<std::size_t>(t) * shape.schools_per_level[i] + j;
    if (slot[k]) {
      throw InputError("duplicate record for level " + r.level + ", school " + r.school +
                       ", year " + r.year);
    }
    if (!(r.response > 0.0 && r.response < 1.0)) {
      throw InputError("response outside (0,1) at level " + r.level + ", school " + r.school +
                       ", year " + r.year);
    }
    slot[k] = &r;
  }
  for (int i = 0; i < shape.levels(); ++i) {
    for (int t = 0; t < shape.years; ++t) {
      for (int j = 0; j < shape.schools_per_level[i]; ++j) {
        std::size_t k = level_start[i] + static_cast<std::size_t>(t) * shape.schools_per_level[i] + j;
        if (!slot[k]) {
          throw InputError("unbalanced panel: missing (level " + labels.levels[i] + ", school " +
                           labels.schools[i][j] + ", year " + labels.years[t] + ")");
        }
      }
    }
  }

  // Gather each named column, z-scoring the flagged ones over all records.
  auto column = [&](const std::string& name) {
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = slot[k]->covariates.at(name);
    if (std::count(design.standardize.begin(), design.standardize.end(), name))
      values = covariate_standardize(values);
    return values;
  };
  auto design_matrix = [&](const std::vector<std::string>& names) {
    const std::size_t width = names.size() + 1;
    std::vector<double> m(n * width, 1.0);
    for (std::size_t c = 0; c < names.size(); ++c) {
      auto col = column(names[c]);
      for (std::size_t k = 0; k < n; ++k) m[k * width + c + 1] = col[k];
    }
    return m;
  };

  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = slot[k]->response;

  std::vector<std::string> mean_names{"intercept"};
  mean_names.insert(mean_names.end(), design.mean_covariates.begin(), design.mean_covariates.end());
  std::vector<std::string> precision_names{"intercept"};
  precision_names.insert(precision_names.end(), design.precision_covariates.begin(),
                         design.precision_covariates.end());

  return ObservationTable(std::move(shape), std::move(labels), std::move(mean_names),
                          std::move(precision_names), std::move(y),
                          design_matrix(design.mean_covariates),
                          design_matrix(design.precision_covariates));
}

std::vector<RawRecord> read_panel_csv(const std::string& path, const std::string& response_column) {
  CsvTable csv = read_csv(path);
  const std::size_t c_level = csv.require_column("level");
  const std::size_t c_school = csv.require_column("school_id");
  const std::size_t c_year = csv.require_column("year");
  const std::size_t c_y = csv.require_column(response_column);
  std::vector<RawRecord> out;
  out.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string where = path + " row " + std::to_string(r + 2);
    RawRecord rec;
    rec.level = row[c_level];
    rec.school = row[c_school];
    rec.year = row[c_year];
    rec.response = parse_double(row[c_y], where);
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
      if (c == c_level || c == c_school || c == c_year || c == c_y) continue;
      rec.covariates[csv.header[c]] = parse_double(row[c], where);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_panel_csv(const std::string& path, const ObservationTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<std::string> header{"level", "school_id", "year", "y"};
  for (int m = 1; m < table.p(); ++m) header.push_back(table.mean_names()[m]);
  std::vector<int> extra;  // precision columns not already written as mean columns
  for (int k = 1; k < table.q(); ++k) {
    const auto& name = table.precision_names()[k];
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      header.push_back(name);
      extra.push_back(k);
    }
  }
  write_csv_row(out, header);
  const auto& labels = table.labels();
  for (std::size_t k = 0; k < table.size(); ++k) {
    auto idx = table.index(k);
    std::vector<std::string> row{labels.levels[idx.level], labels.schools[idx.level][idx.school],
                                 labels.years[idx.year], format_double(table.response(k))};
    auto x = table.mean_covariates(k);
    for (int m = 1; m < table.p(); ++m) row.push_back(format_double(x[m]));
    auto qv = table.precision_covariates(k);
    for (int c : extra) row.push_back(format_double(qv[c]));
    write_csv_row(out, row);
  }
}

}  // namespace hdbeta
