#include "kgl/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/lexicon.hpp"
#include "kgl/util.hpp"

namespace kgl {

const char* to_string(Normalization n) { return n == Normalization::relative ? "relative" : "raw"; }

Normalization parse_normalization(const std::string& s) {
  if (s == "relative") return Normalization::relative;
  if (s == "raw") return Normalization::raw;
  throw ConfigError("unknown normalization mode '" + s + "' (expected relative or raw)");
}

namespace {

FrequencyMatrix matrix_shell(const Lexicon& lex, const RegionCounts& counts, Normalization mode,
                             std::vector<const RegionStats*>& stats) {
  FrequencyMatrix m;
  m.mode = mode;
  m.words = lex.words();
  for (const auto& [id, s] : counts.regions) {
    m.regions.push_back(id);
    m.n_docs.push_back(s.n_docs);
    stats.push_back(&s);
  }
  m.values.assign(m.rows() * m.cols(), 0.0);
  return m;
}

void fill_row(FrequencyMatrix& m, std::size_t r, const RegionStats& s, const std::vector<double>& weights,
              bool relative_counts) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto it = s.counts.find(m.words[c]);
    if (it == s.counts.end()) continue;
    double v = it->second;
    if (relative_counts) v = s.total > 0.0 ? v / s.total : 0.0;
    m.at(r, c) = weights[c] * v;
  }
}

std::vector<double> weights_of(const Lexicon& lex) {
  std::vector<double> w;
  for (const auto& [word, e] : lex.entries) w.push_back(e.weight);
  return w;
}

}  // namespace

FrequencyMatrix weighted_frequency_matrix(const Lexicon& lex, const RegionCounts& counts, Normalization mode) {
  std::vector<const RegionStats*> stats;
  auto m = matrix_shell(lex, counts, mode, stats);
  const auto weights = weights_of(lex);
  const bool relative = mode == Normalization::relative && counts.mode == CountMode::count;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(m.rows()); ++r) {
    fill_row(m, static_cast<std::size_t>(r), *stats[static_cast<std::size_t>(r)], weights, relative);
  }
  return m;
}

namespace serial {

FrequencyMatrix weighted_frequency_matrix(const Lexicon& lex, const RegionCounts& counts, Normalization mode) {
  std::vector<const RegionStats*> stats;
  auto m = matrix_shell(lex, counts, mode, stats);
  const auto weights = weights_of(lex);
  const bool relative = mode == Normalization::relative && counts.mode == CountMode::count;
  for (std::size_t r = 0; r < m.rows(); ++r) fill_row(m, r, *stats[r], weights, relative);
  return m;
}

}  // namespace serial

std::optional<double> ScoreTable::score_of(const std::string& region) const {
  for (const auto& r : rows) {
    if (r.region == region) return r.score;
  }
  return std::nullopt;
}

std::map<std::string, double> ScoreTable::as_map(bool normalized) const {
  std::map<std::string, double> out;
  for (const auto& r : rows) {
    if (normalized && !r.score_norm) throw InputError("score table has no normalized scores");
    out[r.region] = normalized ? *r.score_norm : r.score;
  }
  return out;
}

ScoreTable ScoreTable::for_construct(const std::string& construct) const {
  ScoreTable out;
  for (const auto& r : rows) {
    if (r.construct == construct) out.rows.push_back(r);
  }
  return out;
}

ScoreTable region_scores(const FrequencyMatrix& matrix, const std::string& construct) {
  ScoreTable out;
  out.rows.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < matrix.cols(); ++c) s += matrix.at(r, c);
    out.rows.push_back({matrix.regions[r], construct, s, matrix.n_docs[r], std::nullopt});
  }
  return out;
}

namespace {

std::vector<std::string> constructs_in_order(const ScoreTable& t) {
  std::vector<std::string> out;
  for (const auto& r : t.rows) {
    if (std::find(out.begin(), out.end(), r.construct) == out.end()) out.push_back(r.construct);
  }
  return out;
}

}  // namespace

ScoreTable aggregate_to_state(const ScoreTable& scores, const RegionMap& county_to_state) {
  ScoreTable out;
  for (const auto& construct : constructs_in_order(scores)) {
    std::map<std::string, std::pair<double, std::size_t>> sums;
    std::map<std::string, std::int64_t> docs;
    for (const auto& r : scores.rows) {
      if (r.construct != construct) continue;
      const auto it = county_to_state.find(r.region);
      if (it == county_to_state.end()) throw InputError("county " + r.region + " has no state mapping");
      auto& [sum, n] = sums[it->second];
      sum += r.score;
      ++n;
      docs[it->second] += r.n_docs;
    }
    for (const auto& [state, sn] : sums) {
      out.rows.push_back({state, construct, sn.first / static_cast<double>(sn.second), docs[state], std::nullopt});
    }
  }
  return out;
}

ScoreTable normalize01(const ScoreTable& scores) {
  ScoreTable out = scores;
  for (const auto& construct : constructs_in_order(scores)) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : scores.rows) {
      if (r.construct != construct) continue;
      lo = std::min(lo, r.score);
      hi = std::max(hi, r.score);
    }
    if (!(hi > lo)) throw NumericError("cannot 0-1 normalize '" + construct + "': all scores identical");
    for (auto& r : out.rows) {
      if (r.construct == construct) r.score_norm = (r.score - lo) / (hi - lo);
    }
  }
  return out;
}

ScoreTable zscore(const ScoreTable& scores) {
  ScoreTable out = scores;
  for (const auto& construct : constructs_in_order(scores)) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : scores.rows) {
      if (r.construct == construct) {
        sum += r.score;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : scores.rows) {
      if (r.construct == construct) ss += (r.score - mean) * (r.score - mean);
    }
    if (n < 2 || !(ss > 0.0)) throw NumericError("cannot z-score '" + construct + "': zero variance");
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    for (auto& r : out.rows) {
      if (r.construct == construct) r.score_norm = (r.score - mean) / sd;
    }
  }
  return out;
}

ScoreTable diff_score(const ScoreTable& individualism, const ScoreTable& collectivism, bool normalized,
                      const std::string& construct) {
  const auto a = individualism.as_map(normalized);
  const auto b = collectivism.as_map(normalized);
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
        return x.first == y.first;
      })) {
    throw InputError("diff_score: individualism and collectivism cover different regions");
  }
  std::map<std::string, std::int64_t> docs;
  for (const auto& r : individualism.rows) docs[r.region] = r.n_docs;
  ScoreTable out;
  for (const auto& [region, v] : a) out.rows.push_back({region, construct, v - b.at(region), docs[region], std::nullopt});
  return out;
}

const std::vector<std::string>& acp_labels() {
  static const std::vector<std::string> labels = {
      "Aging Farmlands",   "African American South", "Big Cities",          "College Towns",
      "Evangelical Hubs",  "Exurbs",                 "Graying America",     "Hispanic Centers",
      "LDS Enclaves",      "Middle Suburbs",         "Military Posts",      "Native American Lands",
      "Rural Middle America", "Urban Suburbs",       "Working Class Country"};
  return labels;
}

bool is_acp_label(const std::string& label) {
  const auto& l = acp_labels();
  return std::find(l.begin(), l.end(), label) != l.end();
}

std::vector<CommunityRow> community_summary(const ScoreTable& individualism, const ScoreTable& collectivism,
                                            const RegionMap& communities, std::size_t min_counties) {
  if (min_counties < 1) throw ConfigError("min_counties must be >= 1");
  const auto indiv = individualism.as_map();
  const auto coll = collectivism.as_map();

  std::map<std::string, std::vector<std::string>> members;
  for (const auto& [region, label] : communities) {
    if (indiv.count(region) && coll.count(region)) members[label].push_back(region);
  }
  std::vector<std::string> included;
  for (const auto& [label, regions] : members) {
    if (regions.size() >= min_counties) included.push_back(label);
  }
  if (included.empty()) return {};

  const auto minmax = [&](const std::map<std::string, double>& m) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& label : included) {
      for (const auto& r : members[label]) {
        lo = std::min(lo, m.at(r));
        hi = std::max(hi, m.at(r));
      }
    }
    if (!(hi > lo)) throw NumericError("community summary: degenerate score range");
    return std::pair{lo, hi - lo};
  };
  const auto [ilo, irange] = minmax(indiv);
  const auto [clo, crange] = minmax(coll);

  std::vector<CommunityRow> rows;
  for (const auto& label : included) {
    const auto& regions = members[label];
    double si = 0.0, sc = 0.0;
    for (const auto& r : regions) {
      si += (indiv.at(r) - ilo) / irange;
      sc += (coll.at(r) - clo) / crange;
    }
    const double n = static_cast<double>(regions.size());
    rows.push_back({label, si / n, sc / n, regions.size()});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CommunityRow& a, const CommunityRow& b) { return a.mean_indiv > b.mean_indiv; });
  return rows;
}

void save_scores(const ScoreTable& scores, const std::filesystem::path& path) {
  CsvWriter w({"region_id", "construct", "score", "score_norm", "n_docs"});
  for (const auto& r : scores.rows) {
    w.row({r.region, r.construct, format_double(r.score), r.score_norm ? format_double(*r.score_norm) : "",
           std::to_string(r.n_docs)});
  }
  w.save(path);
}

ScoreTable load_scores(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const auto src = path.string();
  const auto ci = t.require_column("region_id", src), cc = t.require_column("construct", src),
             cs = t.require_column("score", src), cn = t.require_column("score_norm", src),
             cd = t.require_column("n_docs", src);
  ScoreTable out;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& row = t.rows[k];
    const auto at = src + ":" + std::to_string(t.lines[k]);
    ScoreRow r;
    r.region = row[ci];
    r.construct = row[cc];
    const auto s = parse_double(row[cs]);
    if (!s || !std::isfinite(*s)) throw InputError(at + ": bad score '" + row[cs] + "'");
    r.score = *s;
    if (!trim(row[cn]).empty()) {
      const auto n = parse_double(row[cn]);
      if (!n) throw InputError(at + ": bad score_norm '" + row[cn] + "'");
      r.score_norm = *n;
    }
    const auto d = parse_int(row[cd]);
    if (!d) throw InputError(at + ": bad n_docs '" + row[cd] + "'");
    r.n_docs = *d;
    out.rows.push_back(std::move(r));
  }
  return out;
}

void save_community_summary(const std::vector<CommunityRow>& rows, const std::filesystem::path& path) {
  CsvWriter w({"community", "mean_indiv", "mean_coll", "n_counties"});
  for (const auto& r : rows) {
    w.row({r.community, format_double(r.mean_indiv), format_double(r.mean_coll), std::to_string(r.n_counties)});
  }
  w.save(path);
}

RegionMap load_region_map(const std::filesystem::path& path, bool acp) {
  const auto t = read_csv(path);
  const auto src = path.string();
  const auto cf = t.require_column("fips", src), cc = t.require_column("code", src);
  RegionMap out;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto at = src + ":" + std::to_string(t.lines[k]);
    const std::string fips(trim(t.rows[k][cf]));
    const std::string code(trim(t.rows[k][cc]));
    if (!is_valid_region_id(fips)) throw InputError(at + ": invalid region id '" + fips + "'");
    if (acp && !is_acp_label(code)) throw InputError(at + ": unknown ACP community '" + code + "'");
    if (!out.emplace(fips, code).second) throw InputError(at + ": duplicate mapping for " + fips);
  }
  return out;
}

}  // namespace kgl
