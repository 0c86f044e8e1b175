#include "kgl/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <set>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/stats.hpp"
#include "kgl/util.hpp"

namespace kgl {

SeedSet make_seed_set(std::string construct, const std::vector<std::string>& entries) {
  SeedSet s;
  s.construct = std::string(trim(construct));
  if (s.construct.empty()) throw InputError("seed set has no construct name");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    auto words = split_ws(to_lower_ascii(e));
    if (words.empty()) throw InputError("empty seed entry in construct '" + s.construct + "'");
    auto norm = join(words, " ");
    if (!seen.insert(norm).second) throw InputError("duplicate seed '" + norm + "' in construct '" + s.construct + "'");
    s.entries.push_back(std::move(norm));
  }
  if (s.entries.empty()) throw InputError("seed set '" + s.construct + "' is empty");
  return s;
}

SeedSet load_seed_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::string> entries;
  std::string construct;
  bool header = false;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (!line.starts_with("construct:")) {
        throw InputError(path.string() + ":1: seed file must start with 'construct:<name>'");
      }
      construct = std::string(trim(line.substr(10)));
      header = true;
      continue;
    }
    entries.emplace_back(line);
  }
  if (!header) throw InputError(path.string() + ": empty seed file");
  return make_seed_set(construct, entries);
}

void save_seed_file(const SeedSet& seeds, const std::filesystem::path& path) {
  std::string out = "construct:" + seeds.construct + "\n";
  for (const auto& e : seeds.entries) out += e + "\n";
  write_file(path, out);
}

const char* to_string(Origin o) {
  switch (o) {
    case Origin::seed: return "seed";
    case Origin::synonym: return "synonym-expansion";
    case Origin::concept_expansion: return "concept-expansion";
  }
  return "?";
}

Origin parse_origin(const std::string& s) {
  if (s == "seed") return Origin::seed;
  if (s == "synonym-expansion") return Origin::synonym;
  if (s == "concept-expansion") return Origin::concept_expansion;
  throw InputError("unknown lexicon origin '" + s + "'");
}

std::vector<std::string> Lexicon::words() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& [w, e] : entries) out.push_back(w);
  return out;
}

std::vector<std::string> Lexicon::phrases() const {
  std::vector<std::string> out;
  for (const auto& [w, e] : entries) {
    if (w.find(' ') != std::string::npos) out.push_back(w);
  }
  return out;
}

std::vector<LexiconEntry> seed_entries(const SeedSet& seeds) {
  std::vector<LexiconEntry> out;
  for (const auto& s : seeds.entries) out.push_back({s, 1.0, Origin::seed, s});
  return out;
}

namespace {

// Vocabulary spellings of every seed, so expansion never returns a seed.
TokenSet seed_exclusions(const SeedSet& seeds) {
  TokenSet out;
  for (const auto& s : seeds.entries) {
    out.insert(s);
    out.insert(replace_all(s, ' ', '_'));
  }
  return out;
}

std::optional<Vec> resolve_seed(const EmbeddingTable& table, const std::string& seed, const ExpansionOptions& opts,
                                std::vector<std::string>* warnings) {
  try {
    return phrase_vector(table, seed).vector;
  } catch (const InputError& e) {
    if (!opts.skip_unresolvable) throw;
    if (warnings) warnings->push_back(std::string("skipped seed: ") + e.what());
    return std::nullopt;
  }
}

void append_neighbors(std::vector<LexiconEntry>& out, std::vector<Neighbor> hits, Origin origin,
                      const std::string& source, std::size_t top_k) {
  if (top_k > 0 && hits.size() > top_k) hits.resize(top_k);
  for (auto& h : hits) {
    out.push_back({replace_all(std::move(h.token), '_', ' '), std::min(h.similarity, kMaxExpansionWeight), origin,
                   source});
  }
}

}  // namespace

std::vector<LexiconEntry> synonym_expand(const EmbeddingTable& table, const SeedSet& seeds, double tau_syn,
                                         const ExpansionOptions& opts, std::vector<std::string>* warnings) {
  const auto exclude = seed_exclusions(seeds);
  std::vector<LexiconEntry> out;
  for (const auto& s : seeds.entries) {
    const auto v = resolve_seed(table, s, opts, warnings);
    if (!v) continue;
    append_neighbors(out, neighbors_at_least(table, *v, tau_syn, exclude), Origin::synonym, s, opts.top_k);
  }
  return out;
}

std::vector<LexiconEntry> concept_expand(const EmbeddingTable& table, const SeedSet& seeds, double tau_con,
                                         const ExpansionOptions& opts, std::vector<std::string>* warnings) {
  std::vector<std::string> resolvable;
  for (const auto& s : seeds.entries) {
    if (resolve_seed(table, s, opts, warnings)) resolvable.push_back(s);
  }
  if (resolvable.empty()) throw InputError("no seed of '" + seeds.construct + "' resolves in the embedding table");
  const auto c = centroid(table, resolvable);
  std::vector<LexiconEntry> out;
  append_neighbors(out, neighbors_at_least(table, c, tau_con, seed_exclusions(seeds)), Origin::concept_expansion, "centroid",
                   opts.top_k);
  return out;
}

namespace {

int origin_rank(Origin o) {
  switch (o) {
    case Origin::seed: return 0;
    case Origin::synonym: return 1;
    case Origin::concept_expansion: return 2;
  }
  return 3;
}

bool better(const LexiconEntry& a, const LexiconEntry& b) {
  if (a.weight != b.weight) return a.weight > b.weight;
  if (a.origin != b.origin) return origin_rank(a.origin) < origin_rank(b.origin);
  return a.source < b.source;
}

}  // namespace

Lexicon merge_entries(const std::string& construct, const std::vector<LexiconEntry>& seeds,
                      const std::vector<LexiconEntry>& synonyms, const std::vector<LexiconEntry>& concepts) {
  Lexicon lex;
  lex.construct = construct;
  for (const auto* list : {&seeds, &synonyms, &concepts}) {
    for (const auto& e : *list) {
      auto [it, inserted] = lex.entries.emplace(e.word, e);
      if (!inserted && better(e, it->second)) it->second = e;
    }
  }
  return lex;
}

PruneResult frequency_prune(const Lexicon& lex, const RegionCounts& counts, const FrequencyFloors& floors,
                            const EmbeddingTable* table) {
  if (counts.regions.empty()) throw InputError("frequency_prune: no regions in corpus counts");
  PruneResult out;
  out.lexicon.construct = lex.construct;
  out.lexicon.provenance = lex.provenance;
  double grand_total = 0.0;
  for (const auto& [id, s] : counts.regions) grand_total += s.total;
  const double n_regions = static_cast<double>(counts.regions.size());

  for (const auto& [word, entry] : lex.entries) {
    std::int64_t present = 0;
    double raw_sum = 0.0, rel_sum = 0.0;
    std::vector<double> rels;
    rels.reserve(counts.regions.size());
    for (const auto& [id, s] : counts.regions) {
      const auto it = s.counts.find(word);
      const double c = it == s.counts.end() ? 0.0 : it->second;
      if (c > 0.0) ++present;
      raw_sum += c;
      const double rel = counts.mode == CountMode::freq ? c : (s.total > 0.0 ? c / s.total : 0.0);
      rel_sum += rel;
      rels.push_back(rel);
    }
    const double corpus_freq = counts.mode == CountMode::freq ? rel_sum / n_regions
                                                              : (grand_total > 0.0 ? raw_sum / grand_total : 0.0);
    const double mean = rel_sum / n_regions;
    double var = 0.0;
    for (double r : rels) var += (r - mean) * (r - mean);
    var /= n_regions;

    std::string reason;
    double stat = 0.0;
    if (present == 0) {
      reason = "zero-occurrence";
    } else if (present < floors.min_regions) {
      reason = "below-min-regions";
      stat = static_cast<double>(present);
    } else if (corpus_freq < floors.min_rel_freq) {
      reason = "below-min-frequency";
      stat = corpus_freq;
    } else if (var <= 1e-24 * mean * mean) {
      reason = "zero-variance";
      stat = var;
    } else if (table && floors.max_embedding_rank) {
      const auto idx = table->find(replace_all(word, ' ', '_'));
      if (idx && table->frequency_rank(*idx) > *floors.max_embedding_rank) {
        reason = "below-embedding-rank";
        stat = static_cast<double>(table->frequency_rank(*idx));
      }
    }
    if (reason.empty()) {
      out.lexicon.entries.emplace(word, entry);
    } else {
      out.removals.push_back({word, reason, stat});
    }
  }
  return out;
}

std::vector<double> internal_correlations(const FrequencyMatrix& matrix, const std::vector<std::size_t>& columns) {
  const std::size_t rows = matrix.rows();
  std::vector<double> total(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto c : columns) total[r] += matrix.at(r, c);
  }
  std::vector<double> out(columns.size());
  std::vector<double> col(rows), rest(rows);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    for (std::size_t r = 0; r < rows; ++r) {
      col[r] = matrix.at(r, columns[k]);
      rest[r] = total[r] - col[r];
    }
    out[k] = pearson_r(col, rest);
  }
  return out;
}

PurifyColumnsResult purify_columns(const FrequencyMatrix& matrix, const std::vector<double>& weights, double theta) {
  if (matrix.rows() < 3) {
    throw NumericError("purify needs at least 3 regions, found " + std::to_string(matrix.rows()));
  }
  PurifyColumnsResult out;
  out.kept.resize(matrix.cols());
  for (std::size_t c = 0; c < matrix.cols(); ++c) out.kept[c] = c;

  while (out.kept.size() > 2) {
    auto rs = internal_correlations(matrix, out.kept);
    // An undefined correlation (constant column or complement) counts as 0.
    for (auto& r : rs) {
      if (!std::isfinite(r)) r = 0.0;
    }
    std::size_t worst = 0;
    for (std::size_t k = 1; k < rs.size(); ++k) {
      const auto ck = out.kept[k], cw = out.kept[worst];
      if (rs[k] < rs[worst] || (rs[k] == rs[worst] && (weights[ck] < weights[cw] ||
                                                       (weights[ck] == weights[cw] &&
                                                        matrix.words[ck] < matrix.words[cw])))) {
        worst = k;
      }
    }
    if (rs[worst] >= theta) break;
    out.removals.push_back({matrix.words[out.kept[worst]], "internal-correlation", rs[worst]});
    out.kept.erase(out.kept.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return out;
}

PruneResult purify(const Lexicon& lex, const RegionCounts& counts, double theta, Normalization mode) {
  const auto matrix = weighted_frequency_matrix(lex, counts, mode);
  std::vector<double> weights;
  for (const auto& w : matrix.words) weights.push_back(lex.entries.at(w).weight);
  auto result = purify_columns(matrix, weights, theta);
  PruneResult out;
  out.lexicon.construct = lex.construct;
  out.lexicon.provenance = lex.provenance;
  for (auto c : result.kept) out.lexicon.entries.emplace(matrix.words[c], lex.entries.at(matrix.words[c]));
  out.removals = std::move(result.removals);
  return out;
}

void validate(const BuildConfig& config) {
  const auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open01(config.tau_syn)) throw ConfigError("tau_syn must lie in (0,1)");
  if (!open01(config.tau_con)) throw ConfigError("tau_con must lie in (0,1)");
  if (!(config.theta >= 0.0)) throw ConfigError("theta must be >= 0");
  if (config.floors.min_regions < 0) throw ConfigError("min_regions must be >= 0");
  if (!(config.floors.min_rel_freq >= 0.0)) throw ConfigError("min_rel_freq must be >= 0");
}

std::string BuildReport::to_json(const BuildConfig& config) const {
  nlohmann::ordered_json j;
  j["construct"] = construct;
  j["thresholds"] = {{"tau_syn", config.tau_syn},
                     {"tau_con", config.tau_con},
                     {"theta", config.theta},
                     {"min_regions", config.floors.min_regions},
                     {"min_rel_freq", config.floors.min_rel_freq},
                     {"expand", config.expand},
                     {"purify", config.purify},
                     {"normalization", to_string(config.normalization)}};
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (const auto& [k, v] : stage_sizes) stages[k] = v;
  j["stage_sizes"] = stages;
  const auto removals = [](const std::vector<Removal>& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : list) arr.push_back({{"word", r.word}, {"reason", r.reason}, {"statistic", r.statistic}});
    return arr;
  };
  j["frequency_removals"] = removals(frequency_removals);
  j["purify_removals"] = removals(purify_removals);
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

BuildResult expand_lexicon(const BuildConfig& config, const EmbeddingTable& table, const SeedSet& seeds) {
  validate(config);
  BuildResult out;
  out.report.construct = seeds.construct;
  const auto s = seed_entries(seeds);
  std::vector<LexiconEntry> syn, con;
  if (config.expand) {
    syn = synonym_expand(table, seeds, config.tau_syn, config.expansion, &out.report.warnings);
    con = concept_expand(table, seeds, config.tau_con, config.expansion, &out.report.warnings);
  }
  out.lexicon = merge_entries(seeds.construct, s, syn, con);
  out.lexicon.provenance["tau_syn"] = format_double(config.tau_syn);
  out.lexicon.provenance["tau_con"] = format_double(config.tau_con);
  out.lexicon.provenance["expand"] = config.expand ? "true" : "false";
  out.report.stage_sizes["1_seeds"] = s.size();
  out.report.stage_sizes["2_synonym_entries"] = syn.size();
  out.report.stage_sizes["3_concept_entries"] = con.size();
  out.report.stage_sizes["4_merged"] = out.lexicon.size();
  return out;
}

BuildResult prune_lexicon(const BuildConfig& config, BuildResult expanded, const RegionCounts& counts,
                          const EmbeddingTable* table) {
  validate(config);
  auto pruned = frequency_prune(expanded.lexicon, counts, config.floors, table);
  expanded.report.frequency_removals = std::move(pruned.removals);
  expanded.report.stage_sizes["5_after_frequency"] = pruned.lexicon.size();
  expanded.lexicon = std::move(pruned.lexicon);
  if (config.purify) {
    auto purified = purify(expanded.lexicon, counts, config.theta, config.normalization);
    expanded.report.purify_removals = std::move(purified.removals);
    expanded.lexicon = std::move(purified.lexicon);
  }
  expanded.report.stage_sizes["6_after_purify"] = expanded.lexicon.size();
  expanded.lexicon.provenance["theta"] = format_double(config.theta);
  expanded.lexicon.provenance["purify"] = config.purify ? "true" : "false";
  return expanded;
}

BuildResult build_lexicon(const BuildConfig& config, const EmbeddingTable& table, const SeedSet& seeds,
                          const RegionCounts& counts) {
  return prune_lexicon(config, expand_lexicon(config, table, seeds), counts, &table);
}

void save_lexicon(const Lexicon& lex, const std::filesystem::path& path) {
  std::vector<const LexiconEntry*> sorted;
  for (const auto& [w, e] : lex.entries) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const LexiconEntry* a, const LexiconEntry* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    return a->word < b->word;
  });
  CsvWriter w({"word", "weight", "origin", "source"});
  for (const auto* e : sorted) w.row({e->word, format_double(e->weight), to_string(e->origin), e->source});
  w.save(path);
}

Lexicon load_lexicon(const std::filesystem::path& path, const std::string& construct) {
  const auto t = read_csv(path);
  const auto src = path.string();
  const auto cw = t.require_column("word", src), cwt = t.require_column("weight", src),
             co = t.require_column("origin", src), cs = t.require_column("source", src);
  Lexicon lex;
  lex.construct = construct;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& row = t.rows[k];
    const auto at = src + ":" + std::to_string(t.lines[k]);
    const auto weight = parse_double(row[cwt]);
    if (!weight || !(*weight > 0.0) || *weight > 1.0) throw InputError(at + ": weight must lie in (0,1]");
    LexiconEntry e{row[cw], *weight, parse_origin(row[co]), row[cs]};
    if (!lex.entries.emplace(e.word, e).second) throw InputError(at + ": duplicate word '" + e.word + "'");
  }
  return lex;
}

}  // namespace kgl
