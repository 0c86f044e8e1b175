#include "kgl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <omp.h>
#include <set>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/util.hpp"

namespace kgl {

bool is_county_id(std::string_view code) {
  return code.size() == 5 && std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_state_id(std::string_view code) {
  return code.size() == 2 && std::all_of(code.begin(), code.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

bool is_valid_region_id(std::string_view code) { return is_county_id(code) || is_state_id(code); }

namespace {

// Decodes one UTF-8 code point at s[i]; malformed bytes decode as themselves.
char32_t decode_at(std::string_view s, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  const auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  const auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    len = 2;
    return (static_cast<char32_t>(b0 & 0x1F) << 6) | byte(1);
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    len = 3;
    return (static_cast<char32_t>(b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    len = 4;
    return (static_cast<char32_t>(b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
  }
  len = 1;
  return b0;
}

bool is_unicode_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return std::ispunct(static_cast<int>(c)) != 0;
  return c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB || c == 0xBF ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || c == 0x3001 || c == 0x3002 ||
         c == 0xFF01 || c == 0xFF0C || c == 0xFF0E || c == 0xFF1F;
}

// Byte length of the code point ending at s[end-1].
std::size_t last_cp_start(std::string_view s, std::size_t end) {
  std::size_t start = end - 1;
  while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80 && end - start < 4) --start;
  return start;
}

std::string_view strip_punct(std::string_view s) {
  while (!s.empty()) {
    std::size_t len = 0;
    if (!is_punct(decode_at(s, 0, len))) break;
    s.remove_prefix(len);
  }
  while (!s.empty()) {
    const std::size_t start = last_cp_start(s, s.size());
    std::size_t len = 0;
    const char32_t c = decode_at(s, start, len);
    if (start + len != s.size() || !is_punct(c)) break;
    s.remove_suffix(len);
  }
  return s;
}

bool is_url(std::string_view s) { return s.starts_with("http://") || s.starts_with("https://"); }

template <class Fn>
void for_each_piece(std::string_view text, Fn&& fn) {
  std::size_t i = 0, start = 0;
  bool in_piece = false;
  while (i < text.size()) {
    std::size_t len = 0;
    const char32_t c = decode_at(text, i, len);
    if (is_unicode_space(c)) {
      if (in_piece) fn(text.substr(start, i - start));
      in_piece = false;
    } else if (!in_piece) {
      in_piece = true;
      start = i;
    }
    i += len;
  }
  if (in_piece) fn(text.substr(start));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for_each_piece(text, [&](std::string_view piece) {
    std::string lower = to_lower_ascii(piece);
    std::string_view view(lower);
    if (is_url(view) || view.starts_with('@')) return;
    view = strip_punct(view);
    if (view.empty() || is_url(view)) return;
    out.emplace_back(view);
  });
  return out;
}

const char* to_string(CountMode m) { return m == CountMode::count ? "count" : "freq"; }

void RegionCounts::merge(const RegionCounts& other) {
  if (other.mode != mode) throw InputError("cannot merge count-mode and freq-mode tables");
  docs_known = docs_known && other.docs_known;
  for (const auto& [id, stats] : other.regions) {
    auto& mine = regions[id];
    for (const auto& [w, c] : stats.counts) mine.counts[w] += c;
    mine.total += stats.total;
    mine.n_docs += stats.n_docs;
  }
}

double RegionCounts::count(const std::string& region, const std::string& word) const {
  const auto r = regions.find(region);
  if (r == regions.end()) return 0.0;
  const auto w = r->second.counts.find(word);
  return w == r->second.counts.end() ? 0.0 : w->second;
}

double RegionCounts::relative_frequency(const std::string& region, const std::string& word) const {
  const auto r = regions.find(region);
  if (r == regions.end() || r->second.total <= 0.0) return 0.0;
  const auto w = r->second.counts.find(word);
  if (w == r->second.counts.end()) return 0.0;
  return mode == CountMode::freq ? w->second : w->second / r->second.total;
}

std::vector<std::string> RegionCounts::retain_min_docs(std::int64_t floor) {
  std::vector<std::string> dropped;
  if (!docs_known) return dropped;
  for (auto it = regions.begin(); it != regions.end();) {
    if (it->second.n_docs < floor) {
      dropped.push_back(it->first);
      it = regions.erase(it);
    } else {
      ++it;
    }
  }
  return dropped;
}

namespace {

struct PhraseIndex {
  struct Entry {
    std::vector<std::string> words;
    std::string text;
  };
  std::unordered_map<std::string, std::vector<Entry>> by_first;

  explicit PhraseIndex(const std::vector<std::string>& phrases) {
    std::set<std::string> seen;
    for (const auto& p : phrases) {
      auto words = split_ws(p);
      if (words.size() < 2) throw InputError("phrase '" + p + "' must contain at least two words");
      auto text = join(words, " ");
      if (!seen.insert(text).second) continue;
      by_first[words[0]].push_back({std::move(words), std::move(text)});
    }
  }
  bool empty() const { return by_first.empty(); }
};

void count_document(const std::vector<std::string>& tokens, const PhraseIndex& phrases, RegionStats& stats) {
  if (!phrases.empty()) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto it = phrases.by_first.find(tokens[i]);
      if (it == phrases.by_first.end()) continue;
      for (const auto& e : it->second) {
        if (i + e.words.size() > tokens.size()) continue;
        bool match = true;
        for (std::size_t k = 1; k < e.words.size() && match; ++k) match = tokens[i + k] == e.words[k];
        if (match) stats.counts[e.text] += 1.0;
      }
    }
  }
  for (const auto& t : tokens) stats.counts[t] += 1.0;
  stats.total += static_cast<double>(tokens.size());
  stats.n_docs += 1;
}

// Processes docs[begin, end) into `out`; `line_of(i)` gives the report line.
template <class LineOf>
void aggregate_range(std::span<const Document> docs, std::size_t begin, std::size_t end, const PhraseIndex& phrases,
                     const LineOf& line_of, RegionCounts& out, std::vector<RejectedRecord>& rejected) {
  RegionStats* cached = nullptr;
  const std::string* cached_id = nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& doc = docs[i];
    if (!is_valid_region_id(doc.region)) {
      rejected.push_back({line_of(i), "invalid region id '" + doc.region + "'"});
      continue;
    }
    if (!cached_id || *cached_id != doc.region) {
      auto it = out.regions.try_emplace(doc.region).first;
      cached = &it->second;
      cached_id = &it->first;
    }
    count_document(tokenize(doc.text), phrases, *cached);
  }
}

template <class LineOf>
AggregateResult aggregate_parallel(std::span<const Document> docs, const std::vector<std::string>& phrase_list,
                                   const LineOf& line_of) {
  const PhraseIndex phrases(phrase_list);
  const auto n = docs.size();
  const auto shards = static_cast<std::size_t>(std::max(1, omp_get_max_threads()));
  std::vector<RegionCounts> partial(shards);
  std::vector<std::vector<RejectedRecord>> rejected(shards);

#pragma omp parallel for schedule(static, 1)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(shards); ++s) {
    const auto shard = static_cast<std::size_t>(s);
    const std::size_t begin = n * shard / shards;
    const std::size_t end = n * (shard + 1) / shards;
    aggregate_range(docs, begin, end, phrases, line_of, partial[shard], rejected[shard]);
  }

  AggregateResult result;
  for (std::size_t s = 0; s < shards; ++s) {
    result.counts.merge(partial[s]);
    result.rejected.insert(result.rejected.end(), rejected[s].begin(), rejected[s].end());
  }
  return result;
}

}  // namespace

AggregateResult aggregate_counts(std::span<const Document> docs, const std::vector<std::string>& phrases,
                                 std::size_t first_line) {
  return aggregate_parallel(docs, phrases, [first_line](std::size_t i) { return first_line + i; });
}

namespace serial {

AggregateResult aggregate_counts(std::span<const Document> docs, const std::vector<std::string>& phrase_list,
                                 std::size_t first_line) {
  const PhraseIndex phrases(phrase_list);
  AggregateResult result;
  aggregate_range(docs, 0, docs.size(), phrases, [first_line](std::size_t i) { return first_line + i; },
                  result.counts, result.rejected);
  return result;
}

}  // namespace serial

namespace {

// Splits a TSV line; false when there is no tab.
bool parse_tsv_line(std::string_view line, Document& doc) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) return false;
  doc.region = std::string(trim(line.substr(0, tab)));
  doc.text = std::string(line.substr(tab + 1));
  return true;
}

}  // namespace

AggregateResult aggregate_tsv(const std::filesystem::path& path, const std::vector<std::string>& phrases,
                              std::size_t chunk_lines) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file: " + path.string());
  AggregateResult total;
  std::vector<Document> chunk;
  std::vector<std::size_t> lines;
  chunk.reserve(chunk_lines);
  lines.reserve(chunk_lines);
  std::string raw;
  std::size_t line_no = 0;

  const auto flush = [&] {
    auto part = aggregate_parallel(chunk, phrases, [&](std::size_t i) { return lines[i]; });
    total.counts.merge(part.counts);
    total.rejected.insert(total.rejected.end(), part.rejected.begin(), part.rejected.end());
    chunk.clear();
    lines.clear();
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    Document doc;
    if (!parse_tsv_line(raw, doc)) {
      total.rejected.push_back({line_no, "missing tab separator"});
      continue;
    }
    chunk.push_back(std::move(doc));
    lines.push_back(line_no);
    if (chunk.size() >= chunk_lines) flush();
  }
  if (!chunk.empty()) flush();
  std::sort(total.rejected.begin(), total.rejected.end(),
            [](const RejectedRecord& a, const RejectedRecord& b) { return a.line < b.line; });
  return total;
}

std::vector<Document> read_documents_tsv(const std::filesystem::path& path, std::vector<RejectedRecord>& rejected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file: " + path.string());
  std::vector<Document> docs;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    Document doc;
    if (!parse_tsv_line(raw, doc)) {
      rejected.push_back({line_no, "missing tab separator"});
      continue;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

RegionCounts load_region_counts(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const std::string where = path.string();
  RegionCounts out;
  out.docs_known = false;
  if (table.header == std::vector<std::string>{"region_id", "word", "count"}) {
    out.mode = CountMode::count;
  } else if (table.header == std::vector<std::string>{"region_id", "word", "freq"}) {
    out.mode = CountMode::freq;
  } else {
    throw InputError(where + ": unknown header '" + join(table.header, ",") +
                     "' (expected region_id,word,count or region_id,word,freq)");
  }

  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    const auto at = where + ":" + std::to_string(table.lines[k]);
    const std::string region(trim(row[0]));
    const std::string word(trim(row[1]));
    if (!is_valid_region_id(region)) throw InputError(at + ": invalid region id '" + region + "'");
    if (word.empty()) throw InputError(at + ": empty word");
    double value = 0.0;
    if (out.mode == CountMode::count) {
      const auto v = parse_int(row[2]);
      if (!v) throw InputError(at + ": count '" + row[2] + "' is not an integer");
      if (*v < 0) throw InputError(at + ": negative count for (" + region + ", " + word + ")");
      value = static_cast<double>(*v);
    } else {
      const auto v = parse_double(row[2]);
      if (!v || !std::isfinite(*v)) throw InputError(at + ": frequency '" + row[2] + "' is not a number");
      if (*v < 0.0 || *v > 1.0) throw InputError(at + ": relative frequency outside [0,1] for (" + region + ", " + word + ")");
      value = *v;
    }
    auto& stats = out.regions[region];
    if (!stats.counts.emplace(word, value).second) {
      throw InputError(at + ": duplicate (region, word) pair (" + region + ", " + word + ")");
    }
    if (out.mode == CountMode::count) stats.total += value;
  }
  if (out.mode == CountMode::freq) {
    for (auto& [id, stats] : out.regions) stats.total = 1.0;
  }
  return out;
}

void save_region_counts(const RegionCounts& counts, const std::filesystem::path& path) {
  CsvWriter w({"region_id", "word", counts.mode == CountMode::count ? "count" : "freq"});
  for (const auto& [id, stats] : counts.regions) {
    std::vector<std::pair<std::string, double>> sorted(stats.counts.begin(), stats.counts.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [word, c] : sorted) {
      w.row({id, word,
             counts.mode == CountMode::count ? std::to_string(static_cast<std::int64_t>(c)) : format_double(c)});
    }
  }
  w.save(path);
}

void write_error_report(const std::vector<RejectedRecord>& rejected, const std::filesystem::path& path) {
  CsvWriter w({"line_number", "reason"});
  for (const auto& r : rejected) w.row({std::to_string(r.line), r.reason});
  w.save(path);
}

}  // namespace kgl
