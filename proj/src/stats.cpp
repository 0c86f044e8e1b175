#include "kgl/stats.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <omp.h>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/rng.hpp"
#include "kgl/util.hpp"

namespace kgl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return kNaN;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) throw NumericError("p-value needs n >= 3");
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(r) * std::sqrt(df) / std::sqrt(1.0 - r * r);
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: series lengths differ");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  if (xs.size() < 3) throw NumericError("pearson: need n >= 3 complete pairs, found " + std::to_string(xs.size()));
  const double r = pearson_r(xs, ys);
  if (std::isnan(r)) throw NumericError("pearson: zero-variance series");
  return {r, pearson_p_value(r, xs.size()), xs.size()};
}

namespace {

double sample_variance(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double cronbach_alpha(const std::vector<std::vector<double>>& items) {
  const std::size_t k = items.size();
  if (k < 2) throw InputError("cronbach_alpha: need at least 2 items");
  const std::size_t n = items[0].size();
  if (n < 3) throw NumericError("cronbach_alpha: need at least 3 units");
  std::vector<double> total(n, 0.0);
  double item_var = 0.0;
  for (const auto& col : items) {
    if (col.size() != n) throw InputError("cronbach_alpha: ragged item matrix");
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(col[i])) throw InputError("cronbach_alpha: missing cell");
      total[i] += col[i];
    }
    item_var += sample_variance(col);
  }
  const double total_var = sample_variance(total);
  if (!(total_var > 0.0)) throw NumericError("cronbach_alpha: zero total-score variance");
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

std::optional<std::size_t> IndicatorTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

IndicatorTable IndicatorTable::select(const std::vector<std::string>& wanted) const {
  IndicatorTable out;
  out.units = units;
  for (const auto& w : wanted) {
    const auto c = column(w);
    if (!c) throw InputError("indicator column '" + w + "' not found");
    out.names.push_back(w);
    out.columns.push_back(columns[*c]);
  }
  return out;
}

IndicatorTable load_indicators(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const auto src = path.string();
  if (t.header.empty() || t.header[0] != "state") throw InputError(src + ": first column must be 'state'");
  if (t.header.size() < 2) throw InputError(src + ": no indicator columns");
  IndicatorTable out;
  out.names.assign(t.header.begin() + 1, t.header.end());
  out.columns.assign(out.names.size(), {});
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& row = t.rows[k];
    const auto at = src + ":" + std::to_string(t.lines[k]);
    out.units.emplace_back(trim(row[0]));
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (trim(row[j]).empty()) {
        out.columns[j - 1].push_back(kNaN);
        continue;
      }
      const auto v = parse_double(row[j]);
      if (!v || !std::isfinite(*v)) throw InputError(at + ": bad value '" + row[j] + "' in " + out.names[j - 1]);
      out.columns[j - 1].push_back(*v);
    }
  }
  return out;
}

void save_indicators(const IndicatorTable& table, const std::filesystem::path& path) {
  std::vector<std::string> header{"state"};
  header.insert(header.end(), table.names.begin(), table.names.end());
  CsvWriter w(header);
  for (std::size_t i = 0; i < table.units.size(); ++i) {
    std::vector<std::string> row{table.units[i]};
    for (const auto& col : table.columns) row.push_back(std::isnan(col[i]) ? "" : format_double(col[i]));
    w.row(row);
  }
  w.save(path);
}

SubsetResult best_subset(const IndicatorTable& indicators, std::size_t min_size) {
  const std::size_t m = indicators.names.size();
  if (min_size < 2) throw ConfigError("best_subset: min_size must be >= 2");
  if (m < min_size) {
    throw InputError("best_subset: need at least " + std::to_string(min_size) + " indicator columns, found " +
                     std::to_string(m));
  }
  if (m > 24) throw InputError("best_subset: exhaustive search limited to 24 columns");

  SubsetResult out;
  bool found = false;
  std::vector<std::string> best_sorted;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) < min_size) continue;
    SubsetCandidate cand;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask & (1u << j)) {
        cols.push_back(j);
        cand.names.push_back(indicators.names[j]);
      }
    }
    std::vector<std::vector<double>> items(cols.size());
    for (std::size_t i = 0; i < indicators.units.size(); ++i) {
      bool complete = true;
      for (auto c : cols) complete = complete && !std::isnan(indicators.columns[c][i]);
      if (!complete) continue;
      for (std::size_t k = 0; k < cols.size(); ++k) items[k].push_back(indicators.columns[cols[k]][i]);
    }
    try {
      cand.alpha = cronbach_alpha(items);
    } catch (const NumericError& e) {
      cand.note = e.what();
    }
    if (cand.alpha) {
      auto sorted = cand.names;
      std::sort(sorted.begin(), sorted.end());
      const bool take = !found || *cand.alpha > out.alpha ||
                        (*cand.alpha == out.alpha &&
                         (cand.names.size() < out.names.size() ||
                          (cand.names.size() == out.names.size() && sorted < best_sorted)));
      if (take) {
        found = true;
        out.alpha = *cand.alpha;
        out.names = cand.names;
        best_sorted = std::move(sorted);
      }
    }
    out.candidates.push_back(std::move(cand));
  }
  if (!found) throw NumericError("best_subset: no subset has a defined Cronbach's alpha");
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const SubsetCandidate& a, const SubsetCandidate& b) { return a.names.size() < b.names.size(); });
  return out;
}

ValidationReport validate_scores(const ScoreTable& scores, const IndicatorTable& indicators,
                                 const std::vector<std::string>& primary, const std::string& method) {
  ValidationReport report;
  report.method = method;
  std::vector<std::string> constructs;
  for (const auto& r : scores.rows) {
    if (std::find(constructs.begin(), constructs.end(), r.construct) == constructs.end()) {
      constructs.push_back(r.construct);
    }
  }
  const auto primary_cols = primary.empty() ? indicators.names : primary;
  for (const auto& p : primary_cols) {
    if (!indicators.column(p)) throw InputError("primary indicator '" + p + "' not in indicator table");
  }

  for (const auto& construct : constructs) {
    const auto by_region = scores.for_construct(construct).as_map();
    std::size_t overlap = 0;
    for (const auto& u : indicators.units) overlap += by_region.count(u);
    if (overlap == 0) throw InputError("validate: no state in common between scores and indicators for " + construct);

    double sum = 0.0;
    for (std::size_t j = 0; j < indicators.names.size(); ++j) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < indicators.units.size(); ++i) {
        const auto it = by_region.find(indicators.units[i]);
        if (it == by_region.end()) continue;
        xs.push_back(it->second);
        ys.push_back(indicators.columns[j][i]);
      }
      ValidationCell cell{construct, indicators.names[j], {kNaN, kNaN, 0}, false};
      try {
        cell.result = pearson(xs, ys);
        cell.significant = cell.result.p < 0.05;
      } catch (const NumericError&) {
        // undefined correlation stays NaN in the report
      }
      if (std::find(primary_cols.begin(), primary_cols.end(), cell.indicator) != primary_cols.end()) {
        sum += cell.result.r;
      }
      report.cells.push_back(std::move(cell));
    }
    report.average_validity[construct] = sum / static_cast<double>(primary_cols.size());
  }
  return report;
}

namespace {

struct BootInput {
  std::vector<double> a, b, ind;
};

BootInput complete_rows(std::span<const double> a, std::span<const double> b, std::span<const double> ind) {
  if (a.size() != b.size() || a.size() != ind.size()) throw InputError("bootstrap: series lengths differ");
  BootInput in;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i]) || std::isnan(ind[i])) continue;
    in.a.push_back(a[i]);
    in.b.push_back(b[i]);
    in.ind.push_back(ind[i]);
  }
  if (in.a.size() < 3) throw NumericError("bootstrap: need n >= 3 complete units");
  return in;
}

// One replicate on stream `i`; returns the number of redraws it needed.
std::size_t replicate(const BootInput& in, std::uint64_t seed, std::size_t i, std::size_t max_redraws, double& diff) {
  Rng rng(seed, i);
  const std::size_t n = in.a.size();
  std::vector<double> ra(n), rb(n), ri(n);
  for (std::size_t redraws = 0; redraws <= max_redraws; ++redraws) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto j = static_cast<std::size_t>(rng.below(n));
      ra[k] = in.a[j];
      rb[k] = in.b[j];
      ri[k] = in.ind[j];
    }
    const double r_a = pearson_r(ra, ri);
    const double r_b = pearson_r(rb, ri);
    if (std::isfinite(r_a) && std::isfinite(r_b)) {
      diff = r_a - r_b;
      return redraws;
    }
  }
  throw NumericError("bootstrap: too many degenerate replicates");
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult finish(const BootInput& in, std::vector<double> diffs, std::size_t redraws, std::size_t n_boot) {
  const double ra = pearson_r(in.a, in.ind), rb = pearson_r(in.b, in.ind);
  if (std::isnan(ra) || std::isnan(rb)) throw NumericError("bootstrap: zero-variance input series");
  std::sort(diffs.begin(), diffs.end());
  BootstrapResult out;
  out.delta_r = ra - rb;
  out.ci_low = quantile(diffs, 0.025);
  out.ci_high = quantile(diffs, 0.975);
  out.significant = out.ci_low > 0.0 || out.ci_high < 0.0;
  out.n = in.a.size();
  out.replicates = n_boot;
  out.redraws = redraws;
  return out;
}

}  // namespace

BootstrapResult bootstrap_corr_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                                    std::span<const double> indicator, std::size_t n_boot, std::uint64_t seed) {
  if (n_boot == 0) throw ConfigError("bootstrap: n_boot must be positive");
  const auto in = complete_rows(scores_a, scores_b, indicator);
  const std::size_t max_redraws = 100 * n_boot;
  std::vector<double> diffs(n_boot);
  std::vector<std::size_t> redraws(n_boot, 0);
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_boot); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      redraws[idx] = replicate(in, seed, idx, max_redraws, diffs[idx]);
    } catch (const NumericError&) {
#pragma omp atomic write
      failed = true;
    }
  }
  std::size_t total = 0;
  for (auto r : redraws) total += r;
  if (failed || total > max_redraws) {
    throw NumericError("bootstrap: aborted after " + std::to_string(max_redraws) + " degenerate redraws");
  }
  return finish(in, std::move(diffs), total, n_boot);
}

namespace serial {

BootstrapResult bootstrap_corr_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                                    std::span<const double> indicator, std::size_t n_boot, std::uint64_t seed) {
  if (n_boot == 0) throw ConfigError("bootstrap: n_boot must be positive");
  const auto in = complete_rows(scores_a, scores_b, indicator);
  const std::size_t max_redraws = 100 * n_boot;
  std::vector<double> diffs(n_boot);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n_boot; ++i) {
    total += replicate(in, seed, i, max_redraws, diffs[i]);
    if (total > max_redraws) {
      throw NumericError("bootstrap: aborted after " + std::to_string(max_redraws) + " degenerate redraws");
    }
  }
  return finish(in, std::move(diffs), total, n_boot);
}

}  // namespace serial

}  // namespace kgl
