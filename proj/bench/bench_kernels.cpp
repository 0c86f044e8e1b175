// Serial reference vs OpenMP kernels. Each pair shares fixtures, so the ratio
// of the two timings is the parallel speedup on this machine.

#include <benchmark/benchmark.h>

#include <random>

#include "kgl/corpus.hpp"
#include "kgl/embedding_store.hpp"
#include "kgl/lexicon.hpp"
#include "kgl/scoring.hpp"
#include "kgl/stats.hpp"

namespace {

using namespace kgl;

const EmbeddingTable& table() {
  static const EmbeddingTable t = [] {
    std::mt19937_64 gen(1);
    std::normal_distribution<float> nd;
    const std::size_t n = 50000, dim = 100;
    std::vector<std::string> vocab;
    std::vector<float> data(n * dim);
    for (std::size_t i = 0; i < n; ++i) vocab.push_back("w" + std::to_string(i));
    for (auto& v : data) v = nd(gen);
    return EmbeddingTable(vocab, dim, data);
  }();
  return t;
}

const Vec& query() {
  static const Vec q = table().vector_of(0);
  return q;
}

const std::vector<Document>& documents() {
  static const std::vector<Document> docs = [] {
    std::mt19937_64 gen(2);
    std::uniform_int_distribution<int> word(0, 4999);
    std::vector<Document> out;
    for (std::size_t d = 0; d < 100000; ++d) {
      std::string text;
      for (int t = 0; t < 15; ++t) text += (t ? " w" : "w") + std::to_string(word(gen));
      out.push_back({"0" + std::to_string(1001 + 2 * (d % 1000)), std::move(text)});
    }
    return out;
  }();
  return docs;
}

const RegionCounts& counts() {
  static const RegionCounts c = aggregate_counts(documents(), {}).counts;
  return c;
}

const Lexicon& lexicon() {
  static const Lexicon l = [] {
    Lexicon lex;
    lex.construct = "c";
    for (int i = 0; i < 500; ++i) {
      const auto w = "w" + std::to_string(i * 7);
      lex.entries[w] = {w, 0.5 + 0.001 * i, Origin::synonym, "w0"};
    }
    return lex;
  }();
  return l;
}

struct Series {
  std::vector<double> a, b, ind;
};

const Series& series() {
  static const Series s = [] {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    Series out;
    for (int i = 0; i < 50; ++i) {
      const double latent = nd(gen);
      out.a.push_back(latent + 0.5 * nd(gen));
      out.b.push_back(latent + nd(gen));
      out.ind.push_back(latent + 0.7 * nd(gen));
    }
    return out;
  }();
  return s;
}

// Fixtures are built before the timed loop so neither variant pays for them.
void BM_neighbors_serial(benchmark::State& st) {
  query();
  for (auto _ : st) benchmark::DoNotOptimize(serial::neighbors_at_least(table(), query(), 0.3));
}
void BM_neighbors_parallel(benchmark::State& st) {
  query();
  for (auto _ : st) benchmark::DoNotOptimize(neighbors_at_least(table(), query(), 0.3));
}

void BM_aggregate_serial(benchmark::State& st) {
  documents();
  for (auto _ : st) benchmark::DoNotOptimize(serial::aggregate_counts(documents(), {"w1 w2"}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(documents().size()));
}
void BM_aggregate_parallel(benchmark::State& st) {
  documents();
  for (auto _ : st) benchmark::DoNotOptimize(aggregate_counts(documents(), {"w1 w2"}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(documents().size()));
}

void BM_bootstrap_serial(benchmark::State& st) {
  const auto& s = series();
  for (auto _ : st) benchmark::DoNotOptimize(serial::bootstrap_corr_diff(s.a, s.b, s.ind, 10000, 7));
}
void BM_bootstrap_parallel(benchmark::State& st) {
  const auto& s = series();
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap_corr_diff(s.a, s.b, s.ind, 10000, 7));
}

void BM_frequency_matrix_serial(benchmark::State& st) {
  lexicon();
  counts();
  for (auto _ : st) benchmark::DoNotOptimize(serial::weighted_frequency_matrix(lexicon(), counts()));
}
void BM_frequency_matrix_parallel(benchmark::State& st) {
  lexicon();
  counts();
  for (auto _ : st) benchmark::DoNotOptimize(weighted_frequency_matrix(lexicon(), counts()));
}

}  // namespace

BENCHMARK(BM_neighbors_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_neighbors_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_aggregate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_aggregate_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bootstrap_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_frequency_matrix_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_frequency_matrix_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
