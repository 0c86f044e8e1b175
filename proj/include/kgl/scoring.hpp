#pragma once

// Weighted frequencies, construct scores, aggregation and normalization.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgl/corpus.hpp"

namespace kgl {

struct Lexicon;

// relative: weight * count / region total (default). raw: weight * count.
enum class Normalization { relative, raw };
const char* to_string(Normalization n);
Normalization parse_normalization(const std::string& s);

// Regions x words, row-major.
struct FrequencyMatrix {
  std::vector<std::string> regions;
  std::vector<std::string> words;
  std::vector<std::int64_t> n_docs;
  std::vector<double> values;
  Normalization mode = Normalization::relative;

  std::size_t rows() const { return regions.size(); }
  std::size_t cols() const { return words.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * words.size() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * words.size() + c]; }
};

FrequencyMatrix weighted_frequency_matrix(const Lexicon& lex, const RegionCounts& counts,
                                          Normalization mode = Normalization::relative);

struct ScoreRow {
  std::string region;
  std::string construct;
  double score = 0.0;
  std::int64_t n_docs = 0;
  std::optional<double> score_norm;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  std::size_t size() const { return rows.size(); }
  std::optional<double> score_of(const std::string& region) const;
  std::map<std::string, double> as_map(bool normalized = false) const;
  ScoreTable for_construct(const std::string& construct) const;
};

ScoreTable region_scores(const FrequencyMatrix& matrix, const std::string& construct);

using RegionMap = std::map<std::string, std::string>;

// Unweighted mean of member county scores. Throws InputError on an unmapped county.
ScoreTable aggregate_to_state(const ScoreTable& scores, const RegionMap& county_to_state);

// Min-max over the row set, written to score_norm. Throws NumericError when
// fewer than two distinct scores exist.
ScoreTable normalize01(const ScoreTable& scores);
ScoreTable zscore(const ScoreTable& scores);

// Region-wise individualism - collectivism. Uses score_norm when `normalized`.
ScoreTable diff_score(const ScoreTable& individualism, const ScoreTable& collectivism, bool normalized = true,
                      const std::string& construct = "diff");

// American Communities Project county types.
const std::vector<std::string>& acp_labels();
bool is_acp_label(const std::string& label);

struct CommunityRow {
  std::string community;
  double mean_indiv = 0.0;
  double mean_coll = 0.0;
  std::size_t n_counties = 0;
};

// Communities with at least `min_counties` scored counties. Scores are min-max
// normalized over the counties of the included communities before averaging;
// rows are sorted by descending individualism mean.
std::vector<CommunityRow> community_summary(const ScoreTable& individualism, const ScoreTable& collectivism,
                                            const RegionMap& communities, std::size_t min_counties = 40);

// CSV `region_id,construct,score,score_norm,n_docs`.
void save_scores(const ScoreTable& scores, const std::filesystem::path& path);
ScoreTable load_scores(const std::filesystem::path& path);
void save_community_summary(const std::vector<CommunityRow>& rows, const std::filesystem::path& path);

// CSV `fips,code`. When `acp` is set every code must be an ACP label.
RegionMap load_region_map(const std::filesystem::path& path, bool acp = false);

namespace serial {
FrequencyMatrix weighted_frequency_matrix(const Lexicon& lex, const RegionCounts& counts,
                                          Normalization mode = Normalization::relative);
}  // namespace serial

}  // namespace kgl
