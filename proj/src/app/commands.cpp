#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>

#include "json.hpp"

#include "kgl/app.hpp"
#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/parallel.hpp"
#include "kgl/rng.hpp"
#include "kgl/stats.hpp"
#include "kgl/util.hpp"

namespace kgl::app {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Collects digests of everything a command read and wrote.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config)
      : command_(std::move(command)), config_(config), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& path) {
    if (!path.empty() && fs::exists(path)) inputs_[path.string()] = sha256_file(path);
  }
  void output(const fs::path& path) { outputs_.insert(path); }
  json& extra() { return extra_; }

  void write() const {
    json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command_;
    j["tokenizer_version"] = kTokenizerVersion;
    std::string flat;
    for (const auto& [k, v] : config_.effective) flat += k + "=" + v + "\n";
    j["config_sha256"] = sha256_hex(flat);
    j["effective_config"] = config_.effective;
    j["inputs"] = json::array();
    for (const auto& [p, digest] : inputs_) j["inputs"].push_back({{"path", p}, {"sha256", digest}});
    j["outputs"] = json::array();
    for (const auto& p : outputs_) {
      j["outputs"].push_back({{"path", p.lexically_relative(config_.output).generic_string()},
                              {"sha256", sha256_file(p)}});
    }
    if (!extra_.empty()) j["details"] = extra_;
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["wall_time_seconds"] = secs;
    write_file(config_.output / ("manifest_" + command_ + ".json"), j.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& config_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::set<fs::path> outputs_;
  json extra_ = json::object();
};

const fs::path& require_input(const fs::path& path, const std::string& key) {
  if (path.empty()) throw ConfigError(key + " is not set");
  if (!fs::exists(path)) throw InputError("input file not found: " + path.string() + " (" + key + ")");
  return path;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

std::vector<SeedSet> selected_seeds(const RunConfig& config, Manifest* manifest) {
  if (config.seeds.empty()) throw ConfigError("paths.seeds is not set");
  std::vector<SeedSet> out;
  std::set<std::string> names;
  for (const auto& p : config.seeds) {
    require_input(p, "paths.seeds");
    auto s = load_seed_file(p);
    if (!names.insert(s.construct).second) throw ConfigError("construct '" + s.construct + "' has two seed files");
    if (manifest) manifest->input(p);
    if (config.only_construct && s.construct != *config.only_construct) continue;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigError("no seed file for construct '" + config.only_construct.value_or("") + "'");
  return out;
}

std::vector<std::string> selected_constructs(const RunConfig& config) {
  std::vector<std::string> out;
  for (const auto& s : selected_seeds(config, nullptr)) out.push_back(s.construct);
  return out;
}

// Corpus aggregation (or a precomputed table), with the document floor applied.
RegionCounts load_counts(const RunConfig& config, const std::vector<std::string>& phrases, Manifest& manifest,
                         bool write_errors) {
  RegionCounts counts;
  if (!config.counts.empty()) {
    require_input(config.counts, "paths.counts");
    manifest.input(config.counts);
    counts = load_region_counts(config.counts);
  } else {
    if (config.corpus.empty()) throw ConfigError("either paths.corpus or paths.counts must be set");
    require_input(config.corpus, "paths.corpus");
    manifest.input(config.corpus);
    auto agg = aggregate_tsv(config.corpus, phrases);
    if (!agg.rejected.empty()) warn(std::to_string(agg.rejected.size()) + " corpus records rejected");
    if (write_errors) {
      const auto path = config.output / "corpus_errors.csv";
      write_error_report(agg.rejected, path);
      manifest.output(path);
    }
    counts = std::move(agg.counts);
  }
  const auto dropped = counts.retain_min_docs(config.min_docs);
  if (!dropped.empty()) {
    warn(std::to_string(dropped.size()) + " regions below " + std::to_string(config.min_docs) + " documents dropped");
  }
  if (counts.regions.empty()) throw InputError("no region left after the document floor");
  return counts;
}

BuildConfig seeds_only(const BuildConfig& base) {
  BuildConfig c = base;
  c.expand = false;
  c.purify = false;
  c.floors.min_regions = 0;
  c.floors.min_rel_freq = 0.0;
  c.floors.max_embedding_rank.reset();
  return c;
}

std::vector<std::string> union_phrases(const std::vector<Lexicon>& lexica) {
  std::set<std::string> all;
  for (const auto& l : lexica) {
    for (const auto& p : l.phrases()) all.insert(p);
  }
  return {all.begin(), all.end()};
}

ScoreTable normalize(const ScoreTable& scores, bool use_z) {
  std::vector<std::string> constructs;
  for (const auto& r : scores.rows) {
    if (std::find(constructs.begin(), constructs.end(), r.construct) == constructs.end()) {
      constructs.push_back(r.construct);
    }
  }
  ScoreTable out;
  for (const auto& c : constructs) {
    auto part = use_z ? zscore(scores.for_construct(c)) : normalize01(scores.for_construct(c));
    for (auto& r : part.rows) out.rows.push_back(std::move(r));
  }
  return out;
}

bool all_state_ids(const ScoreTable& t) {
  return !t.rows.empty() &&
         std::all_of(t.rows.begin(), t.rows.end(), [](const ScoreRow& r) { return is_state_id(r.region); });
}

// County (or state) rows -> state rows, when a mapping or state-level input allows it.
std::optional<ScoreTable> to_state_level(const ScoreTable& raw, const std::optional<RegionMap>& county_state) {
  if (all_state_ids(raw)) return raw;
  if (!county_state) return std::nullopt;
  ScoreTable out;
  std::vector<std::string> seen;
  for (const auto& r : raw.rows) {
    if (std::find(seen.begin(), seen.end(), r.construct) != seen.end()) continue;
    seen.push_back(r.construct);
    for (auto& s : aggregate_to_state(raw.for_construct(r.construct), *county_state).rows) {
      out.rows.push_back(std::move(s));
    }
  }
  return out;
}

ScoreTable score_lexica(const std::vector<Lexicon>& lexica, const RegionCounts& counts, Normalization mode) {
  ScoreTable out;
  for (const auto& lex : lexica) {
    for (auto& r : region_scores(weighted_frequency_matrix(lex, counts, mode), lex.construct).rows) {
      out.rows.push_back(std::move(r));
    }
  }
  return out;
}

std::string star_cell(const ValidationCell& c) {
  if (!std::isfinite(c.result.r)) return "NA";
  return format_fixed(c.result.r, 3) + (c.significant ? "*" : "");
}

double directed(const RunConfig& config, const std::string& construct, double avg) {
  const auto it = config.directions.find(construct);
  return it == config.directions.end() ? avg : it->second * avg;
}

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

std::optional<RegionMap> optional_map(const fs::path& path, const std::string& key, bool acp, Manifest& m) {
  if (path.empty()) return std::nullopt;
  require_input(path, key);
  m.input(path);
  return load_region_map(path, acp);
}

// ---------------------------------------------------------------------------

std::string geojson_fips(const json& feature) {
  if (feature.contains("properties") && feature["properties"].is_object()) {
    const auto& p = feature["properties"];
    for (const char* k : {"fips", "FIPS", "GEOID", "geoid"}) {
      if (p.contains(k)) {
        const auto& v = p[k];
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) {
          auto s = std::to_string(v.get<std::int64_t>());
          return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
        }
      }
    }
  }
  if (feature.contains("id") && feature["id"].is_string()) return feature["id"].get<std::string>();
  return {};
}

void write_geojson(const fs::path& boundaries, const std::map<std::string, double>& indiv,
                   const std::map<std::string, double>& coll, const std::map<std::string, double>& diff,
                   const fs::path& out) {
  json in;
  try {
    in = json::parse(read_file(boundaries));
  } catch (const json::parse_error& e) {
    throw InputError(boundaries.string() + ": invalid GeoJSON: " + e.what());
  }
  if (!in.is_object() || in.value("type", "") != "FeatureCollection" || !in.contains("features") ||
      !in["features"].is_array()) {
    throw InputError(boundaries.string() + ": expected a GeoJSON FeatureCollection");
  }
  const auto value = [](const std::map<std::string, double>& m, const std::string& k) -> json {
    const auto it = m.find(k);
    return it == m.end() ? json(nullptr) : json(it->second);
  };
  json fc{{"type", "FeatureCollection"}, {"features", json::array()}};
  std::size_t line = 0;
  for (const auto& f : in["features"]) {
    ++line;
    const auto fips = geojson_fips(f);
    if (fips.empty()) throw InputError(boundaries.string() + ": feature " + std::to_string(line) + " has no FIPS");
    json props{{"fips", fips}, {"score_indiv", value(indiv, fips)}, {"score_coll", value(coll, fips)},
               {"diff", value(diff, fips)}};
    fc["features"].push_back({{"type", "Feature"}, {"geometry", f.value("geometry", json(nullptr))},
                              {"properties", props}});
  }
  write_file(out, fc.dump() + "\n");
}

// ---------------------------------------------------------------------------

struct ValidationInputs {
  IndicatorTable indicators;
  std::vector<std::string> primary;
};

ValidationInputs load_validation_inputs(const RunConfig& config, Manifest& m) {
  require_input(config.indicators, "paths.indicators");
  m.input(config.indicators);
  ValidationInputs v{load_indicators(config.indicators), config.primary_indicators};
  if (v.primary.empty()) v.primary = v.indicators.names;
  return v;
}

void add_report_rows(CsvWriter& wide, CsvWriter& long_form, const ValidationReport& report,
                     const IndicatorTable& indicators) {
  std::vector<std::string> constructs;
  for (const auto& c : report.cells) {
    if (std::find(constructs.begin(), constructs.end(), c.construct) == constructs.end()) {
      constructs.push_back(c.construct);
    }
  }
  for (const auto& construct : constructs) {
    std::vector<std::string> row{report.method, construct};
    for (const auto& name : indicators.names) {
      for (const auto& c : report.cells) {
        if (c.construct == construct && c.indicator == name) row.push_back(star_cell(c));
      }
    }
    row.push_back(format_fixed(report.average_validity.at(construct), 3));
    wide.row(row);
  }
  for (const auto& c : report.cells) {
    long_form.row({report.method, c.construct, c.indicator, num(c.result.r), num(c.result.p),
                   std::to_string(c.result.n), c.significant ? "true" : "false"});
  }
}

std::vector<std::string> wide_header(const std::vector<std::string>& lead, const IndicatorTable& indicators) {
  auto h = lead;
  for (const auto& n : indicators.names) h.push_back(n);
  h.push_back("average_validity");
  return h;
}

const std::vector<std::string> kLongHeader = {"method", "construct", "indicator", "r", "p", "n", "significant"};

}  // namespace

// ===========================================================================

int cmd_build(const RunConfig& config) {
  Manifest m("build", config);
  require_input(config.embeddings, "paths.embeddings");
  const auto seeds = selected_seeds(config, &m);
  m.input(config.embeddings);
  const auto table = load_embeddings(config.embeddings);
  fs::create_directories(config.output);

  const auto baseline_config = seeds_only(config.build);
  std::vector<BuildResult> expanded, baseline;
  std::vector<Lexicon> all;
  for (const auto& s : seeds) {
    expanded.push_back(expand_lexicon(config.build, table, s));
    baseline.push_back(expand_lexicon(baseline_config, table, s));
    all.push_back(expanded.back().lexicon);
    all.push_back(baseline.back().lexicon);
  }
  const auto counts = load_counts(config, union_phrases(all), m, true);

  json summary = json::object();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& name = seeds[i].construct;
    auto full = prune_lexicon(config.build, std::move(expanded[i]), counts, &table);
    auto base = prune_lexicon(baseline_config, std::move(baseline[i]), counts, &table);
    if (full.lexicon.size() == 0) throw InputError("lexicon for " + name + " is empty after pruning");
    full.lexicon.provenance["embeddings_sha256"] = sha256_file(config.embeddings);

    const auto lex_path = config.output / ("lexicon_" + name + ".csv");
    const auto base_path = config.output / ("lexicon_" + name + "_seeds.csv");
    const auto report_path = config.output / ("build_report_" + name + ".json");
    save_lexicon(full.lexicon, lex_path);
    save_lexicon(base.lexicon, base_path);
    write_file(report_path, full.report.to_json(config.build) + "\n");
    for (const auto& w : full.report.warnings) warn(name + ": " + w);
    m.output(lex_path);
    m.output(base_path);
    m.output(report_path);
    summary[name] = {{"lexicon_size", full.lexicon.size()}, {"seeds_only_size", base.lexicon.size()}};
    std::cout << name << ": " << full.lexicon.size() << " entries -> " << lex_path.string() << "\n";
  }
  summary["regions"] = counts.regions.size();
  m.extra() = summary;
  m.write();
  return 0;
}

int cmd_score(const RunConfig& config) {
  Manifest m("score", config);
  const auto constructs = selected_constructs(config);
  std::vector<Lexicon> full, base;
  for (const auto& c : constructs) {
    const auto lp = config.output / ("lexicon_" + c + ".csv");
    const auto bp = config.output / ("lexicon_" + c + "_seeds.csv");
    if (!fs::exists(lp)) throw InputError("lexicon not found: " + lp.string() + " (run `kgl build` first)");
    m.input(lp);
    full.push_back(load_lexicon(lp, c));
    if (fs::exists(bp)) {
      m.input(bp);
      base.push_back(load_lexicon(bp, c));
    }
  }
  std::vector<Lexicon> all = full;
  all.insert(all.end(), base.begin(), base.end());
  const auto counts = load_counts(config, union_phrases(all), m, false);
  const auto county_state = optional_map(config.county_state, "paths.county_state", false, m);

  const auto emit = [&](const std::vector<Lexicon>& lexica, const std::string& suffix) {
    const auto raw = score_lexica(lexica, counts, config.build.normalization);
    const auto county = normalize(raw, config.zscore);
    const auto cp = config.output / ("county_scores" + suffix + ".csv");
    save_scores(county, cp);
    m.output(cp);
    if (const auto state = to_state_level(raw, county_state)) {
      const auto sp = config.output / ("state_scores" + suffix + ".csv");
      save_scores(normalize(*state, config.zscore), sp);
      m.output(sp);
    }
    return county;
  };
  const auto county = emit(full, "");
  if (!base.empty()) emit(base, "_seeds");

  const bool has_pair = std::count(constructs.begin(), constructs.end(), "individualism") &&
                        std::count(constructs.begin(), constructs.end(), "collectivism");
  ScoreTable diff;
  if (has_pair) {
    const auto indiv = county.for_construct("individualism");
    const auto coll = county.for_construct("collectivism");
    diff = diff_score(indiv, coll, !config.diff_raw);
    const auto dp = config.output / "diff_scores.csv";
    save_scores(diff, dp);
    m.output(dp);
    if (const auto communities = optional_map(config.communities, "paths.communities", true, m)) {
      const auto rows = community_summary(indiv, coll, *communities, config.min_community_counties);
      const auto path = config.output / "community_summary.csv";
      save_community_summary(rows, path);
      m.output(path);
    }
  }
  if (!config.boundaries.empty()) {
    require_input(config.boundaries, "paths.boundaries");
    m.input(config.boundaries);
    const auto path = config.output / "scores.geojson";
    write_geojson(config.boundaries, county.for_construct("individualism").as_map(true),
                  county.for_construct("collectivism").as_map(true), diff.as_map(false), path);
    m.output(path);
  }
  std::cout << "scored " << counts.regions.size() << " regions for " << constructs.size() << " construct(s)\n";
  m.write();
  return 0;
}

int cmd_validate(const RunConfig& config) {
  Manifest m("validate", config);
  const auto in = load_validation_inputs(config, m);
  const auto sp = config.output / "state_scores.csv";
  if (!fs::exists(sp)) throw InputError("state scores not found: " + sp.string() + " (run `kgl score` first)");
  m.input(sp);
  std::vector<std::pair<std::string, ScoreTable>> methods{{"kgl", load_scores(sp)}};
  const auto bp = config.output / "state_scores_seeds.csv";
  if (fs::exists(bp)) {
    m.input(bp);
    methods.emplace_back("seeds", load_scores(bp));
  }
  if (config.only_construct) {
    for (auto& [name, t] : methods) t = t.for_construct(*config.only_construct);
  }

  CsvWriter wide(wide_header({"method", "construct"}, in.indicators));
  CsvWriter long_form(kLongHeader);
  json summary;
  std::vector<ValidationReport> reports;
  for (const auto& [name, table] : methods) {
    reports.push_back(validate_scores(table, in.indicators, in.primary, name));
    add_report_rows(wide, long_form, reports.back(), in.indicators);
    for (const auto& [construct, avg] : reports.back().average_validity) {
      summary["average_validity"][name][construct] = avg;
      summary["directed_validity"][name][construct] = directed(config, construct, avg);
    }
  }
  const auto wp = config.output / "validation_report.csv";
  const auto lp = config.output / "validation_long.csv";
  wide.save(wp);
  long_form.save(lp);
  m.output(wp);
  m.output(lp);

  if (methods.size() == 2 && config.n_boot > 0) {
    CsvWriter boot({"construct", "indicator", "method_a", "method_b", "delta_r", "ci_low", "ci_high",
                    "significant", "n", "replicates", "redraws"});
    std::uint64_t index = 0;
    const auto& kgl_scores = methods[0].second;
    const auto& base_scores = methods[1].second;
    std::vector<std::string> constructs;
    for (const auto& [c, avg] : reports[0].average_validity) constructs.push_back(c);
    for (const auto& construct : constructs) {
      const auto a = kgl_scores.for_construct(construct).as_map();
      const auto b = base_scores.for_construct(construct).as_map();
      for (const auto& ind : in.primary) {
        const auto& col = in.indicators.columns[*in.indicators.column(ind)];
        std::vector<double> xa, xb, y;
        for (std::size_t i = 0; i < in.indicators.units.size(); ++i) {
          const auto& u = in.indicators.units[i];
          if (!a.count(u) || !b.count(u)) continue;
          xa.push_back(a.at(u));
          xb.push_back(b.at(u));
          y.push_back(col[i]);
        }
        const auto seed = splitmix64(config.boot_seed + 0x9e3779b97f4a7c15ULL * ++index);
        try {
          const auto r = bootstrap_corr_diff(xa, xb, y, config.n_boot, seed);
          boot.row({construct, ind, "kgl", "seeds", num(r.delta_r), num(r.ci_low), num(r.ci_high),
                    r.significant ? "true" : "false", std::to_string(r.n), std::to_string(r.replicates),
                    std::to_string(r.redraws)});
        } catch (const NumericError& e) {
          warn("bootstrap " + construct + "/" + ind + ": " + e.what());
          boot.row({construct, ind, "kgl", "seeds", "NA", "NA", "NA", "false", std::to_string(y.size()), "0", "0"});
        }
      }
    }
    const auto path = config.output / "bootstrap.csv";
    boot.save(path);
    m.output(path);
    summary["bootstrap"] = {{"interval", "percentile"}, {"level", 0.95}, {"resampling_unit", "state"},
                            {"replicates", config.n_boot}, {"seed", config.boot_seed}};
  }

  if (in.indicators.names.size() >= 3) {
    const auto best = best_subset(in.indicators);
    CsvWriter w({"subset", "size", "alpha", "note"});
    for (const auto& c : best.candidates) {
      w.row({join(c.names, ";"), std::to_string(c.names.size()), c.alpha ? format_double(*c.alpha) : "NA", c.note});
    }
    const auto path = config.output / "cronbach_subsets.csv";
    w.save(path);
    m.output(path);
    summary["cronbach_best"] = {{"subset", best.names}, {"alpha", best.alpha}};
  }
  summary["p_value_test"] = "two-sided t, n-2 df";
  const auto js = config.output / "validation_summary.json";
  write_file(js, summary.dump(2) + "\n");
  m.output(js);
  m.extra() = summary;
  m.write();
  for (const auto& r : reports) {
    for (const auto& [construct, avg] : r.average_validity) {
      std::cout << r.method << " " << construct << ": average validity " << format_fixed(avg, 3) << "\n";
    }
  }
  return 0;
}

int cmd_ablate(const RunConfig& config) {
  Manifest m("ablate", config);
  require_input(config.embeddings, "paths.embeddings");
  const auto seeds = selected_seeds(config, &m);
  m.input(config.embeddings);
  const auto in = load_validation_inputs(config, m);
  const auto county_state = optional_map(config.county_state, "paths.county_state", false, m);
  const auto table = load_embeddings(config.embeddings);
  fs::create_directories(config.output);

  // Lower thresholds admit supersets, so the loosest cell's phrases cover every cell.
  BuildConfig loosest = config.build;
  loosest.tau_syn = *std::min_element(config.grid_tau_syn.begin(), config.grid_tau_syn.end());
  loosest.tau_con = *std::min_element(config.grid_tau_con.begin(), config.grid_tau_con.end());
  loosest.tau_syn = std::min(loosest.tau_syn, config.build.tau_syn);
  loosest.tau_con = std::min(loosest.tau_con, config.build.tau_con);
  std::vector<Lexicon> wide_lexica;
  for (const auto& s : seeds) wide_lexica.push_back(expand_lexicon(loosest, table, s).lexicon);
  const auto counts = load_counts(config, union_phrases(wide_lexica), m, false);

  CsvWriter long_form({"table", "construct", "tau_syn", "tau_con", "theta", "indicator", "r", "p", "n", "significant"});
  const auto run_cell = [&](const SeedSet& s, const BuildConfig& bc, const BuildResult& expanded, CsvWriter& out,
                            const std::string& tag) {
    const auto built = prune_lexicon(bc, expanded, counts, &table);
    std::vector<std::string> row{s.construct, format_double(bc.tau_syn), format_double(bc.tau_con),
                                 format_double(bc.theta), std::to_string(built.lexicon.size())};
    const auto raw = score_lexica({built.lexicon}, counts, bc.normalization);
    const auto state = to_state_level(raw, county_state);
    if (!state) throw ConfigError("ablate needs paths.county_state or state-level regions");
    const auto report = validate_scores(*state, in.indicators, in.primary, "kgl");
    for (const auto& name : in.indicators.names) {
      for (const auto& c : report.cells) {
        if (c.indicator != name) continue;
        row.push_back(star_cell(c));
        long_form.row({tag, s.construct, format_double(bc.tau_syn), format_double(bc.tau_con),
                       format_double(bc.theta), name, num(c.result.r), num(c.result.p), std::to_string(c.result.n),
                       c.significant ? "true" : "false"});
      }
    }
    row.push_back(format_fixed(report.average_validity.at(s.construct), 3));
    out.row(row);
  };

  const auto header = wide_header({"construct", "tau_syn", "tau_con", "theta", "lexicon_length"}, in.indicators);
  CsvWriter expansion(header), purification(header);
  for (const auto& s : seeds) {
    for (double tc : config.grid_tau_con) {
      for (double ts : config.grid_tau_syn) {
        BuildConfig bc = config.build;
        bc.tau_syn = ts;
        bc.tau_con = tc;
        run_cell(s, bc, expand_lexicon(bc, table, s), expansion, "expansion");
      }
    }
    const auto expanded = expand_lexicon(config.build, table, s);
    for (double theta : config.grid_theta) {
      BuildConfig bc = config.build;
      bc.theta = theta;
      run_cell(s, bc, expanded, purification, "purification");
    }
  }
  const auto ep = config.output / "ablation_expansion.csv";
  const auto pp = config.output / "ablation_purification.csv";
  const auto lp = config.output / "ablation_long.csv";
  expansion.save(ep);
  purification.save(pp);
  long_form.save(lp);
  m.output(ep);
  m.output(pp);
  m.output(lp);
  m.write();
  std::cout << "ablation tables written to " << config.output.string() << "\n";
  return 0;
}

int cmd_interpolate(const RunConfig& config) {
  Manifest m("interpolate", config);
  require_input(config.features, "paths.features");
  m.input(config.features);
  const auto features = load_features(config.features);

  std::map<std::string, double> targets;
  if (config.gp_target == "diff") {
    const auto path = config.output / "diff_scores.csv";
    if (!fs::exists(path)) throw InputError("diff scores not found: " + path.string() + " (run `kgl score` first)");
    m.input(path);
    targets = load_scores(path).as_map(false);
  } else {
    const auto path = config.output / "county_scores.csv";
    if (!fs::exists(path)) throw InputError("county scores not found: " + path.string() + " (run `kgl score` first)");
    m.input(path);
    const auto t = load_scores(path).for_construct(config.gp_target);
    if (t.size() == 0) throw ConfigError("gp.target '" + config.gp_target + "' has no scores");
    for (const auto& r : t.rows) targets[r.region] = r.score_norm.value_or(r.score);
  }
  std::vector<std::string> universe;
  if (const auto cs = optional_map(config.county_state, "paths.county_state", false, m)) {
    for (const auto& [fips, state] : *cs) universe.push_back(fips);
  }

  json details;
  if (config.holdout_fraction > 0.0) {
    std::set<std::string> with_features;
    for (const auto& f : features) with_features.insert(f.region);
    std::vector<std::string> pool;
    for (const auto& [r, v] : targets) {
      if (with_features.count(r)) pool.push_back(r);
    }
    Rng rng(config.gp.seed, 0x686f6c64);
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    const auto n_hold = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(pool.size()))));
    if (pool.size() < n_hold + 2) throw InputError("too few observed regions for the requested holdout");
    std::map<std::string, double> train = targets;
    std::vector<std::string> held(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_hold));
    for (const auto& r : held) train.erase(r);
    double base_mean = 0.0;
    for (const auto& [r, v] : train) base_mean += v;
    base_mean /= static_cast<double>(train.size());
    const auto fit = interpolate_missing(train, features, config.gp);
    std::map<std::string, double> predicted;
    for (const auto& row : fit.rows) predicted[row.region] = row.score;
    double se_gp = 0.0, se_const = 0.0;
    CsvWriter w({"fips", "observed", "predicted", "baseline"});
    std::sort(held.begin(), held.end());
    for (const auto& r : held) {
      const double t = targets.at(r), p = predicted.at(r);
      se_gp += (p - t) * (p - t);
      se_const += (base_mean - t) * (base_mean - t);
      w.row({r, format_double(t), format_double(p), format_double(base_mean)});
    }
    const auto hp = config.output / "holdout_predictions.csv";
    w.save(hp);
    m.output(hp);
    const double nh = static_cast<double>(held.size());
    details["holdout"] = {{"n_train", train.size()}, {"n_holdout", held.size()},
                          {"rmse_gp", std::sqrt(se_gp / nh)}, {"rmse_constant", std::sqrt(se_const / nh)}};
    std::cout << "holdout RMSE: gp " << format_fixed(std::sqrt(se_gp / nh), 4) << ", constant baseline "
              << format_fixed(std::sqrt(se_const / nh), 4) << "\n";
  }

  const auto result = interpolate_missing(targets, features, config.gp, universe);
  const auto ip = config.output / "interpolated_scores.csv";
  save_interpolation(result, ip);
  m.output(ip);
  CsvWriter gaps({"fips", "reason"});
  for (const auto& g : result.gaps) gaps.row({g, "unobserved_without_features"});
  for (const auto& g : result.observed_without_features) gaps.row({g, "observed_without_features"});
  const auto gp_path = config.output / "gap_report.csv";
  gaps.save(gp_path);
  m.output(gp_path);

  std::size_t interpolated = 0;
  for (const auto& r : result.rows) interpolated += r.observed ? 0 : 1;
  details["status"] = result.fitted ? "interpolated" : "fully_observed";
  details["interpolated"] = interpolated;
  details["gaps"] = result.gaps.size();
  details["observed_without_features"] = result.observed_without_features.size();
  if (result.fitted) details["model"] = json::parse(result.model.to_json());
  const auto mp = config.output / "gp_model.json";
  write_file(mp, details.dump(2) + "\n");
  m.output(mp);
  m.extra() = details;
  m.write();

  const auto warnings = result.gaps.size() + result.observed_without_features.size();
  if (warnings) warn(std::to_string(warnings) + " regions listed in gap_report.csv");
  std::cout << (result.fitted ? "interpolated " + std::to_string(interpolated) + " regions" : "fully observed")
            << "; " << warnings << " warning(s)\n";
  return 0;
}

int cmd_synth(const RunConfig& config) {
  Manifest m("synth", config);
  const auto data = synth::generate(config.synth);
  synth::write_dataset(data, config.output);
  for (const auto& entry : fs::recursive_directory_iterator(config.output)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("manifest_", 0) != 0) m.output(entry.path());
  }
  m.extra() = {{"seed", config.synth.seed}, {"documents", data.documents.size()}, {"regions", data.regions.size()}};
  m.write();
  std::cout << "synthetic dataset written to " << config.output.string() << "\n";
  return 0;
}

int run(const std::string& command, const RunConfig& config) {
  if (config.threads > 0) set_threads(config.threads);
  if (command == "build") return cmd_build(config);
  if (command == "score") return cmd_score(config);
  if (command == "validate") return cmd_validate(config);
  if (command == "ablate") return cmd_ablate(config);
  if (command == "interpolate") return cmd_interpolate(config);
  if (command == "synth") return cmd_synth(config);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace kgl::app
