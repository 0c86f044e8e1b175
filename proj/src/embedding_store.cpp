#include "kgl/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <omp.h>

#include "kgl/error.hpp"
#include "kgl/util.hpp"

namespace kgl {

EmbeddingTable::EmbeddingTable(std::vector<std::string> vocab, std::size_t dim, std::vector<float> data,
                               std::vector<std::int64_t> frequency_rank)
    : vocab_(std::move(vocab)), dim_(dim), data_(std::move(data)), ranks_(std::move(frequency_rank)) {
  if (dim_ == 0) throw InputError("embedding dimension must be >= 1");
  if (data_.size() != vocab_.size() * dim_) throw InputError("embedding data size does not match vocab x dim");
  if (ranks_.empty()) {
    ranks_.resize(vocab_.size());
    std::iota(ranks_.begin(), ranks_.end(), std::int64_t{1});
  } else if (ranks_.size() != vocab_.size()) {
    throw InputError("frequency rank count does not match vocabulary size");
  }
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    auto [it, inserted] = index_.emplace(vocab_[i], i);
    if (!inserted) {
      throw InputError("duplicate token '" + vocab_[i] + "' at rows " + std::to_string(it->second + 1) + " and " +
                       std::to_string(i + 1));
    }
  }
  norms_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    double s = 0.0;
    for (float v : row(i)) s += static_cast<double>(v) * v;
    norms_[i] = std::sqrt(s);
  }
}

std::optional<std::size_t> EmbeddingTable::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vec EmbeddingTable::vector_of(std::size_t i) const {
  const auto r = row(i);
  return Vec(r.begin(), r.end());
}

namespace {

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_uint(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read embedding file: " + path.string());
  const std::string where = path.string();

  std::vector<std::string> vocab;
  std::vector<float> data;
  std::unordered_map<std::string, std::size_t> first_line;
  std::optional<std::size_t> dim = expected_dim;
  std::optional<std::size_t> header_vocab;
  std::size_t dim_line = 0;

  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fields = fields_of(line);
    if (fields.empty()) continue;

    if (first_content) {
      first_content = false;
      if (fields.size() == 2 && is_uint(fields[0]) && is_uint(fields[1])) {
        const auto hv = *parse_int(fields[0]);
        const auto hd = *parse_int(fields[1]);
        if (hd <= 0) throw InputError(where + ":1: header declares dimension 0");
        if (expected_dim && static_cast<std::size_t>(hd) != *expected_dim) {
          throw InputError(where + ":1: header dimension " + std::to_string(hd) + " does not match expected " +
                           std::to_string(*expected_dim));
        }
        dim = static_cast<std::size_t>(hd);
        dim_line = line_no;
        header_vocab = static_cast<std::size_t>(hv);
        continue;
      }
    }

    const std::size_t d = fields.size() - 1;
    if (d == 0) throw InputError(where + ":" + std::to_string(line_no) + ": token without vector components");
    if (!dim) {
      dim = d;
      dim_line = line_no;
    } else if (d != *dim) {
      throw InputError(where + ":" + std::to_string(line_no) + ": expected " + std::to_string(*dim) +
                       " components, found " + std::to_string(d) +
                       (dim_line ? " (dimension set on line " + std::to_string(dim_line) + ")" : std::string()));
    }
    std::string token(fields[0]);
    auto [it, inserted] = first_line.emplace(token, line_no);
    if (!inserted) {
      throw InputError(where + ": duplicate token '" + token + "' on lines " + std::to_string(it->second) + " and " +
                       std::to_string(line_no));
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      float v = 0.0f;
      const auto f = fields[k];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw InputError(where + ":" + std::to_string(line_no) + ": bad number '" + std::string(f) + "'");
      }
      data.push_back(v);
    }
    vocab.push_back(std::move(token));
  }
  if (in.bad()) throw InputError("read error: " + where);
  if (!dim) throw InputError(where + ": no embedding rows");
  if (header_vocab && *header_vocab != vocab.size()) {
    throw InputError(where + ": header declares " + std::to_string(*header_vocab) + " words, file has " +
                     std::to_string(vocab.size()));
  }
  return EmbeddingTable(std::move(vocab), *dim, std::move(data));
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim()) + "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.token(i);
    for (float v : table.row(i)) {
      char buf[32];
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out.push_back(' ');
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  write_file(path, out);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw NumericError("cosine: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

double query_norm(const EmbeddingTable& table, std::span<const double> query) {
  if (query.size() != table.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) + " does not match table dimension " +
                     std::to_string(table.dim()));
  }
  double s = 0.0;
  for (double v : query) s += v * v;
  if (!(s > 0.0)) throw NumericError("neighbor query has zero norm");
  return std::sqrt(s);
}

// Cosine of row i against the query; shared by the serial and parallel scans
// so both produce bit-identical similarities.
inline double row_similarity(const EmbeddingTable& table, std::size_t i, std::span<const double> query,
                             double qnorm) {
  const double n = table.norm(i);
  if (n <= 0.0) return -1.0;
  const auto r = table.row(i);
  double dot = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) dot += static_cast<double>(r[k]) * query[k];
  return std::clamp(dot / (n * qnorm), -1.0, 1.0);
}

void sort_neighbors(std::vector<Neighbor>& out) {
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.token < b.token;
  });
}

}  // namespace

std::vector<Neighbor> neighbors_at_least(const EmbeddingTable& table, std::span<const double> query,
                                         double threshold, const TokenSet& exclude) {
  const double qnorm = query_norm(table, query);
  const auto n = static_cast<std::int64_t>(table.size());
  std::vector<std::vector<Neighbor>> partial(static_cast<std::size_t>(omp_get_max_threads()));

#pragma omp parallel
  {
    auto& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double s = row_similarity(table, idx, query, qnorm);
      if (s >= threshold && !exclude.contains(table.token(idx))) local.push_back({table.token(idx), s});
    }
  }

  std::vector<Neighbor> out;
  for (auto& p : partial) out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  sort_neighbors(out);
  return out;
}

namespace serial {

std::vector<Neighbor> neighbors_at_least(const EmbeddingTable& table, std::span<const double> query,
                                         double threshold, const TokenSet& exclude) {
  const double qnorm = query_norm(table, query);
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double s = row_similarity(table, i, query, qnorm);
    if (s >= threshold && !exclude.contains(table.token(i))) out.push_back({table.token(i), s});
  }
  sort_neighbors(out);
  return out;
}

}  // namespace serial

Vec centroid(const EmbeddingTable& table, const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw InputError("centroid of an empty token list");
  Vec sum(table.dim(), 0.0);
  for (const auto& t : tokens) {
    const auto v = phrase_vector(table, t).vector;
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
  }
  for (auto& x : sum) x /= static_cast<double>(tokens.size());
  return sum;
}

const char* to_string(PhraseStrategy s) {
  switch (s) {
    case PhraseStrategy::single: return "single";
    case PhraseStrategy::joined: return "joined";
    case PhraseStrategy::mean: return "mean";
  }
  return "?";
}

PhraseVector phrase_vector(const EmbeddingTable& table, std::string_view entry) {
  const auto trimmed = trim(entry);
  if (trimmed.empty()) throw InputError("empty lexicon entry");
  const auto words = split_ws(trimmed);
  if (words.size() == 1) {
    const auto idx = table.find(words[0]);
    if (!idx) throw InputError("unresolvable token '" + words[0] + "': not in embedding vocabulary");
    return {table.vector_of(*idx), PhraseStrategy::single};
  }
  if (const auto joined = table.find(join(words, "_"))) return {table.vector_of(*joined), PhraseStrategy::joined};

  Vec mean(table.dim(), 0.0);
  for (const auto& w : words) {
    const auto idx = table.find(w);
    if (!idx) {
      throw InputError("unresolvable token '" + w + "' in phrase '" + std::string(trimmed) +
                       "': not in embedding vocabulary");
    }
    const auto r = table.row(*idx);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += r[k];
  }
  for (auto& x : mean) x /= static_cast<double>(words.size());
  return {mean, PhraseStrategy::mean};
}

}  // namespace kgl
