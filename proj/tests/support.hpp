#pragma once

// Shared helpers for the test binaries: scratch directories, fixture builders
// and brute-force reference implementations that share no code with the library.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace kgl_test {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "kgl") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

  fs::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace oracle {

// Textbook two-pass formulas in long double.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline double sample_var(const std::vector<double>& v) {
  long double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(s / (v.size() - 1));
}

// items[k][i]: item k, unit i.
inline double cronbach(const std::vector<std::vector<double>>& items) {
  const double k = static_cast<double>(items.size());
  std::vector<double> total(items[0].size(), 0.0);
  double item_var = 0.0;
  for (const auto& it : items) {
    item_var += sample_var(it);
    for (std::size_t i = 0; i < it.size(); ++i) total[i] += it[i];
  }
  return k / (k - 1.0) * (1.0 - item_var / sample_var(total));
}

struct Subset {
  std::vector<std::string> names;
  double alpha = -INFINITY;
};

// Enumerates subsets by size, then lexicographically by sorted names; keeps
// the first strict maximum. Columns must be complete.
inline Subset best_subset(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols,
                          std::size_t min_size) {
  struct Cand {
    std::vector<std::string> sorted;
    std::vector<std::string> names;
    double alpha;
  };
  std::vector<Cand> all;
  const std::size_t m = names.size();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<std::string> nm;
    std::vector<std::vector<double>> items;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask >> j & 1u) {
        nm.push_back(names[j]);
        items.push_back(cols[j]);
      }
    }
    if (nm.size() < min_size) continue;
    auto sorted = nm;
    std::sort(sorted.begin(), sorted.end());
    all.push_back({sorted, nm, cronbach(items)});
  }
  std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
    if (a.names.size() != b.names.size()) return a.names.size() < b.names.size();
    return a.sorted < b.sorted;
  });
  Subset best;
  for (const auto& c : all) {
    if (c.alpha > best.alpha) best = {c.names, c.alpha};
  }
  return best;
}

struct Hit {
  std::string token;
  double sim;
};

// Filter-and-sort over every row, using the plain double formula
// dot / (|row| |q|) clamped to [-1, 1], so exact ties survive.
inline std::vector<Hit> neighbors(const std::vector<std::string>& vocab, const std::vector<float>& data,
                                  std::size_t dim, const std::vector<double>& q, double threshold,
                                  const std::vector<std::string>& exclude) {
  std::vector<Hit> out;
  double qq = 0;
  for (double v : q) qq += v * v;
  const double qn = std::sqrt(qq);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (std::find(exclude.begin(), exclude.end(), vocab[i]) != exclude.end()) continue;
    double dot = 0, rr = 0;
    for (std::size_t d = 0; d < dim; ++d) rr += static_cast<double>(data[i * dim + d]) * data[i * dim + d];
    for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(data[i * dim + d]) * q[d];
    if (rr == 0) continue;
    const double s = std::clamp(dot / (std::sqrt(rr) * qn), -1.0, 1.0);
    if (s >= threshold) out.push_back({vocab[i], s});
  }
  std::stable_sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.token < b.token;
  });
  return out;
}

// r(column c, sum of the other kept columns) for a row-major matrix.
inline double leave_one_out_r(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& kept,
                              std::size_t c) {
  std::vector<double> x, rest;
  for (const auto& row : rows) {
    x.push_back(row[c]);
    double s = 0.0;
    for (auto k : kept) {
      if (k != c) s += row[k];
    }
    rest.push_back(s);
  }
  return pearson(x, rest);
}

}  // namespace oracle

}  // namespace kgl_test
