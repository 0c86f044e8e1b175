#pragma once

// Static word-embedding table with exact cosine neighbor search.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgl {

using Vec = std::vector<double>;
using TokenSet = std::unordered_set<std::string>;

// Fixed vocabulary of dense vectors. Rows are stored as float; norms and dot
// products are accumulated in double. Immutable after construction.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws InputError on duplicate tokens, ragged rows or dim == 0.
  // An empty rank vector means "rank = row order + 1".
  EmbeddingTable(std::vector<std::string> vocab, std::size_t dim, std::vector<float> data,
                 std::vector<std::int64_t> frequency_rank = {});

  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::string& token(std::size_t i) const { return vocab_[i]; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  double norm(std::size_t i) const { return norms_[i]; }
  std::int64_t frequency_rank(std::size_t i) const { return ranks_[i]; }
  std::optional<std::size_t> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  Vec vector_of(std::size_t i) const;

 private:
  std::vector<std::string> vocab_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::vector<std::int64_t> ranks_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads `token v1 .. vd` lines with an optional `vocab_size dim` header.
// Malformed lines are errors that cite the line number.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<std::size_t> expected_dim = std::nullopt);

// Writes the same text format load_embeddings reads, with a header line.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::string token;
  double similarity = 0.0;
  bool operator==(const Neighbor&) const = default;
};

// Every vocabulary token outside `exclude` with cosine >= threshold, sorted by
// descending similarity then ascending token. Full scan, OpenMP over rows.
std::vector<Neighbor> neighbors_at_least(const EmbeddingTable& table, std::span<const double> query,
                                         double threshold, const TokenSet& exclude = {});

Vec centroid(const EmbeddingTable& table, const std::vector<std::string>& tokens);

enum class PhraseStrategy { single, joined, mean };
const char* to_string(PhraseStrategy s);

struct PhraseVector {
  Vec vector;
  PhraseStrategy strategy = PhraseStrategy::single;
};

// Single token -> its row; "fit in" -> row of "fit_in" if present, else the
// mean of the constituent rows. Throws InputError naming a missing word.
PhraseVector phrase_vector(const EmbeddingTable& table, std::string_view entry);

namespace serial {
// Single-threaded reference for neighbors_at_least.
std::vector<Neighbor> neighbors_at_least(const EmbeddingTable& table, std::span<const double> query,
                                         double threshold, const TokenSet& exclude = {});
}  // namespace serial

}  // namespace kgl
