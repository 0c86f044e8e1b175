#pragma once

// Tokenization and per-region token / phrase counting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgl {

inline constexpr const char* kTokenizerVersion = "kgl-tokenizer/1";

// County FIPS (5 digits) or state postal code (2 uppercase letters).
bool is_county_id(std::string_view code);
bool is_state_id(std::string_view code);
bool is_valid_region_id(std::string_view code);

// Lowercase, split on Unicode whitespace, drop URLs and @mentions, strip
// leading/trailing punctuation ('#' included, so hashtags keep their word).
std::vector<std::string> tokenize(std::string_view text);

struct Document {
  std::string region;
  std::string text;
};

enum class CountMode { count, freq };
const char* to_string(CountMode m);

struct RegionStats {
  std::unordered_map<std::string, double> counts;
  double total = 0.0;  // unigram tokens (count mode) or 1.0 (freq mode)
  std::int64_t n_docs = 0;
  bool operator==(const RegionStats&) const = default;
};

struct RegionCounts {
  CountMode mode = CountMode::count;
  // False for tables loaded from CSV, where document counts are unknown.
  bool docs_known = true;
  std::map<std::string, RegionStats> regions;

  void merge(const RegionCounts& other);
  double count(const std::string& region, const std::string& word) const;
  // count / region total; already relative in freq mode.
  double relative_frequency(const std::string& region, const std::string& word) const;
  // Drops regions whose document count is below `floor`; returns the dropped ids.
  // A no-op when document counts are unknown.
  std::vector<std::string> retain_min_docs(std::int64_t floor);
  bool operator==(const RegionCounts&) const = default;
};

struct RejectedRecord {
  std::size_t line = 0;
  std::string reason;
};

struct AggregateResult {
  RegionCounts counts;
  std::vector<RejectedRecord> rejected;
};

// Counts unigrams plus every multi-word entry of `phrases` (sliding window,
// overlaps allowed). Documents are sharded across OpenMP threads; the merged
// result is identical to a single pass. Record i reports as line first_line + i.
AggregateResult aggregate_counts(std::span<const Document> docs, const std::vector<std::string>& phrases,
                                 std::size_t first_line = 1);

// Streams a `region_id<TAB>text` file in fixed-size chunks.
AggregateResult aggregate_tsv(const std::filesystem::path& path, const std::vector<std::string>& phrases,
                              std::size_t chunk_lines = 1 << 18);

std::vector<Document> read_documents_tsv(const std::filesystem::path& path, std::vector<RejectedRecord>& rejected);

// CSV `region_id,word,count` or `region_id,word,freq`.
RegionCounts load_region_counts(const std::filesystem::path& path);
void save_region_counts(const RegionCounts& counts, const std::filesystem::path& path);

void write_error_report(const std::vector<RejectedRecord>& rejected, const std::filesystem::path& path);

namespace serial {
// Single-pass reference for aggregate_counts.
AggregateResult aggregate_counts(std::span<const Document> docs, const std::vector<std::string>& phrases,
                                 std::size_t first_line = 1);
}  // namespace serial

}  // namespace kgl
