#pragma once

// Balanced (level, school, year) panel of (0,1) responses and their
// mean / precision design vectors.
//
// Indices are zero-based internally; file formats and parameter names use the
// one-based convention (level 1..I, school 1..n_i, year 1..T).

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hdbeta {

struct PanelIndex {
  int level = 0;
  int school = 0;
  int year = 0;

  friend bool operator==(const PanelIndex&, const PanelIndex&) = default;
};

/// Number of schools per level and number of years.
struct PanelShape {
  std::vector<int> schools_per_level;
  int years = 0;

  int levels() const { return static_cast<int>(schools_per_level.size()); }
  std::size_t observations() const;
};

/// Human-readable labels carried through to output files.
struct PanelLabels {
  std::vector<std::string> levels;
  std::vector<std::string> years;
  std::vector<std::vector<std::string>> schools;  // per level

  static PanelLabels numbered(const PanelShape& shape);
};

/// Immutable after construction. Records are stored level-major, then year,
/// then school, so every (level, year) cell is a contiguous block.
class ObservationTable {
 public:
  ObservationTable() = default;

  /// `y`, `x`, `q` are in storage order (see offset()); `x` holds p values
  /// per record and `q` holds q values per record, intercepts included.
  ObservationTable(PanelShape shape, PanelLabels labels,
                   std::vector<std::string> mean_names,
                   std::vector<std::string> precision_names,
                   std::vector<double> y, std::vector<double> x,
                   std::vector<double> q);

  const PanelShape& shape() const { return shape_; }
  const PanelLabels& labels() const { return labels_; }
  int levels() const { return shape_.levels(); }
  int years() const { return shape_.years; }
  int schools(int level) const { return shape_.schools_per_level[level]; }
  std::size_t size() const { return y_.size(); }
  int p() const { return p_; }
  int q() const { return q_; }

  /// Names include the leading "intercept".
  const std::vector<std::string>& mean_names() const { return mean_names_; }
  const std::vector<std::string>& precision_names() const { return precision_names_; }

  std::size_t offset(const PanelIndex& idx) const;
  PanelIndex index(std::size_t k) const;

  double response(std::size_t k) const { return y_[k]; }
  std::span<const double> responses() const { return y_; }
  std::span<const double> mean_covariates(std::size_t k) const;
  std::span<const double> precision_covariates(std::size_t k) const;

  /// First record of the (level, year) cell; the cell spans schools(level)
  /// consecutive records.
  std::size_t cell_begin(int level, int year) const;

 private:
  PanelShape shape_;
  PanelLabels labels_;
  std::vector<std::string> mean_names_;
  std::vector<std::string> precision_names_;
  std::vector<std::size_t> level_start_;
  std::vector<double> y_;
  std::vector<double> xcov_;
  std::vector<double> qcov_;
  int p_ = 0;
  int q_ = 0;
};

/// One input row before indexing.
struct RawRecord {
  std::string level;
  std::string school;
  std::string year;
  double response = 0.0;
  std::map<std::string, double> covariates;
};

/// Which named columns enter the mean and precision design vectors, and
/// which of them are z-scored over the whole table. Intercepts are implicit.
struct DesignSpec {
  std::vector<std::string> mean_covariates;
  std::vector<std::string> precision_covariates;
  std::vector<std::string> standardize;
};

/// Builds a balanced table. Throws InputError on an unbalanced panel
/// (naming the first missing cell), a response outside (0,1), duplicate
/// records or an unknown covariate.
ObservationTable build_table(const std::vector<RawRecord>& records,
                             const DesignSpec& design);

/// Same panel with the precision design reduced to the intercept plus the
/// named columns (used to fit intercept-only precision variants on data
/// carrying precision covariates).
ObservationTable select_precision_covariates(const ObservationTable& table,
                                             const std::vector<std::string>& keep);

/// z-score with the sample (n-1) standard deviation.
std::vector<double> covariate_standardize(std::span<const double> values);

/// Reads the panel CSV: header with `level`, `school_id`, `year`, a response
/// column and any number of numeric covariate columns.
std::vector<RawRecord> read_panel_csv(const std::string& path,
                                      const std::string& response_column = "y");

/// Writes a table back out in the same layout (17 significant digits).
void write_panel_csv(const std::string& path, const ObservationTable& table);

}  // namespace hdbeta
