#pragma once

// Correlation, reliability and bootstrap statistics for score validation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgl/scoring.hpp"

namespace kgl {

struct CorrelationResult {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// Sample Pearson r with a two-sided p from t = r sqrt(n-2) / sqrt(1-r^2) on
// n-2 degrees of freedom. NaN entries are dropped pairwise. Throws
// NumericError for n < 3 or a zero-variance series.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);
double pearson_p_value(double r, std::size_t n);
// r only; NaN when undefined. No missing-value handling.
double pearson_r(std::span<const double> x, std::span<const double> y);

// Columns are items, entries are units. Sample variances.
double cronbach_alpha(const std::vector<std::vector<double>>& items);

struct IndicatorTable {
  std::vector<std::string> units;
  std::vector<std::string> names;
  // columns[j][i] is indicator j for unit i; NaN marks a missing cell.
  std::vector<std::vector<double>> columns;

  std::optional<std::size_t> column(const std::string& name) const;
  IndicatorTable select(const std::vector<std::string>& names) const;
};

// CSV `state,<indicator>...`, empty cells are missing.
IndicatorTable load_indicators(const std::filesystem::path& path);
void save_indicators(const IndicatorTable& table, const std::filesystem::path& path);

struct SubsetCandidate {
  std::vector<std::string> names;
  std::optional<double> alpha;  // empty when skipped
  std::string note;
};

struct SubsetResult {
  std::vector<std::string> names;
  double alpha = 0.0;
  std::vector<SubsetCandidate> candidates;
};

// Exhaustive search over column subsets of size >= min_size, using units with
// no missing cell in the subset. Ties: smaller subset, then lexicographic names.
SubsetResult best_subset(const IndicatorTable& indicators, std::size_t min_size = 3);

struct ValidationCell {
  std::string construct;
  std::string indicator;
  CorrelationResult result;
  bool significant = false;  // p < 0.05
};

struct ValidationReport {
  std::string method;
  std::vector<ValidationCell> cells;
  // Mean r over the primary indicators, per construct.
  std::map<std::string, double> average_validity;
};

// `scores` holds state-level rows for one or more constructs. Units are
// matched by id; missing indicator cells are deleted pairwise.
ValidationReport validate_scores(const ScoreTable& scores, const IndicatorTable& indicators,
                                 const std::vector<std::string>& primary, const std::string& method = "kgl");

struct BootstrapResult {
  double delta_r = 0.0;  // r_a - r_b on the full sample
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t redraws = 0;
};

// Percentile 95% CI of r(a, ind) - r(b, ind) under unit resampling. Replicate
// i draws from its own counter-keyed stream, so results do not depend on the
// thread schedule. Inputs are aligned series; NaN rows are dropped first.
BootstrapResult bootstrap_corr_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                                    std::span<const double> indicator, std::size_t n_boot, std::uint64_t seed);

namespace serial {
BootstrapResult bootstrap_corr_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                                    std::span<const double> indicator, std::size_t n_boot, std::uint64_t seed);
}  // namespace serial

}  // namespace kgl
