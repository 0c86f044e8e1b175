#pragma once

// Seed -> expansion -> purification lexicon construction.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgl/corpus.hpp"
#include "kgl/embedding_store.hpp"
#include "kgl/scoring.hpp"

namespace kgl {

// Expansion weights stay strictly below seed weight.
inline constexpr double kMaxExpansionWeight = 1.0 - 1e-9;

struct SeedSet {
  std::string construct;
  std::vector<std::string> entries;
};

// First line `construct:<name>`, then one entry per line.
SeedSet load_seed_file(const std::filesystem::path& path);
void save_seed_file(const SeedSet& seeds, const std::filesystem::path& path);
// Lowercases, trims and rejects empty or duplicate entries.
SeedSet make_seed_set(std::string construct, const std::vector<std::string>& entries);

enum class Origin { seed, synonym, concept_expansion };
const char* to_string(Origin o);
Origin parse_origin(const std::string& s);

struct LexiconEntry {
  std::string word;
  double weight = 1.0;
  Origin origin = Origin::seed;
  std::string source;
  bool operator==(const LexiconEntry&) const = default;
};

struct Lexicon {
  std::string construct;
  std::map<std::string, LexiconEntry> entries;
  std::map<std::string, std::string> provenance;

  std::size_t size() const { return entries.size(); }
  bool contains(const std::string& w) const { return entries.count(w) > 0; }
  std::vector<std::string> words() const;
  // Multi-word entries, needed by the corpus phrase counter.
  std::vector<std::string> phrases() const;
};

struct Removal {
  std::string word;
  std::string reason;
  double statistic = 0.0;
};

struct ExpansionOptions {
  // Warn and skip seeds that cannot be resolved instead of failing.
  bool skip_unresolvable = false;
  // Optional cap on neighbors kept per query; 0 = uncapped.
  std::size_t top_k = 0;
};

std::vector<LexiconEntry> seed_entries(const SeedSet& seeds);
std::vector<LexiconEntry> synonym_expand(const EmbeddingTable& table, const SeedSet& seeds, double tau_syn,
                                         const ExpansionOptions& opts = {},
                                         std::vector<std::string>* warnings = nullptr);
std::vector<LexiconEntry> concept_expand(const EmbeddingTable& table, const SeedSet& seeds, double tau_con,
                                         const ExpansionOptions& opts = {},
                                         std::vector<std::string>* warnings = nullptr);

// Union keyed by word; larger weight wins, ties by origin seed > synonym > concept.
Lexicon merge_entries(const std::string& construct, const std::vector<LexiconEntry>& seeds,
                      const std::vector<LexiconEntry>& synonyms, const std::vector<LexiconEntry>& concepts);

struct FrequencyFloors {
  std::int64_t min_regions = 10;
  double min_rel_freq = 1e-7;
  // When set, entries whose embedding frequency rank exceeds this are dropped too.
  std::optional<std::int64_t> max_embedding_rank;
};

struct PruneResult {
  Lexicon lexicon;
  std::vector<Removal> removals;
};

PruneResult frequency_prune(const Lexicon& lex, const RegionCounts& counts, const FrequencyFloors& floors,
                            const EmbeddingTable* table = nullptr);

// Pearson r between each column and the sum of all other columns.
std::vector<double> internal_correlations(const FrequencyMatrix& matrix, const std::vector<std::size_t>& columns);

struct PurifyColumnsResult {
  std::vector<std::size_t> kept;
  std::vector<Removal> removals;
};

// Greedy fixed point: drop the single worst column while its statistic is
// below theta and more than two columns remain. Ties go to the lower weight,
// then the lexicographically smaller word.
PurifyColumnsResult purify_columns(const FrequencyMatrix& matrix, const std::vector<double>& weights, double theta);

PruneResult purify(const Lexicon& lex, const RegionCounts& counts, double theta,
                   Normalization mode = Normalization::relative);

struct BuildConfig {
  double tau_syn = 0.75;
  double tau_con = 0.45;
  double theta = 0.15;
  FrequencyFloors floors;
  Normalization normalization = Normalization::relative;
  ExpansionOptions expansion;
  bool expand = true;
  bool purify = true;
};

void validate(const BuildConfig& config);

struct BuildReport {
  std::string construct;
  std::map<std::string, std::size_t> stage_sizes;
  std::vector<Removal> frequency_removals;
  std::vector<Removal> purify_removals;
  std::vector<std::string> warnings;
  std::string to_json(const BuildConfig& config) const;
};

struct BuildResult {
  Lexicon lexicon;
  BuildReport report;
};

// Seeds plus both expansions, before any corpus-based pruning.
BuildResult expand_lexicon(const BuildConfig& config, const EmbeddingTable& table, const SeedSet& seeds);
// Frequency pruning then purification of an expanded lexicon.
BuildResult prune_lexicon(const BuildConfig& config, BuildResult expanded, const RegionCounts& counts,
                          const EmbeddingTable* table = nullptr);
BuildResult build_lexicon(const BuildConfig& config, const EmbeddingTable& table, const SeedSet& seeds,
                          const RegionCounts& counts);

// CSV `word,weight,origin,source`, descending weight then word.
void save_lexicon(const Lexicon& lex, const std::filesystem::path& path);
Lexicon load_lexicon(const std::filesystem::path& path, const std::string& construct);

}  // namespace kgl
