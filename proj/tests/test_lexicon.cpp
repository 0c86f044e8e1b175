#include "doctest.h"

#include <random>

#include "kgl/error.hpp"
#include "kgl/lexicon.hpp"
#include "kgl/util.hpp"
#include "support.hpp"

using namespace kgl;
using kgl_test::TempDir;

namespace {

EmbeddingTable table_of(const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  std::vector<std::string> vocab;
  std::vector<float> data;
  for (const auto& [t, v] : rows) {
    vocab.push_back(t);
    data.insert(data.end(), v.begin(), v.end());
  }
  return EmbeddingTable(vocab, rows.front().second.size(), data);
}

// regions x words relative frequencies, totals fixed at 1000.
RegionCounts counts_from(const std::vector<std::string>& words, const std::vector<std::vector<double>>& rows) {
  RegionCounts rc;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& s = rc.regions["0" + std::to_string(1001 + 2 * r)];
    s.total = 1000;
    s.n_docs = 200;
    for (std::size_t c = 0; c < words.size(); ++c) {
      if (rows[r][c] > 0) s.counts[words[c]] = rows[r][c];
    }
  }
  return rc;
}

Lexicon lex_of(const std::vector<std::pair<std::string, double>>& words) {
  Lexicon l;
  l.construct = "c";
  for (const auto& [w, wt] : words) l.entries[w] = {w, wt, wt == 1.0 ? Origin::seed : Origin::synonym, "s"};
  return l;
}

std::vector<std::string> words_of(const std::vector<LexiconEntry>& e) {
  std::vector<std::string> out;
  for (const auto& x : e) out.push_back(x.word);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("seed files") {
  TempDir dir;
  const auto s = load_seed_file(dir.write("s.txt", "construct:collectivism\nDuties\nresponsibilities\n\nfit in\n"));
  CHECK(s.construct == "collectivism");
  CHECK(s.entries == std::vector<std::string>{"duties", "responsibilities", "fit in"});
  save_seed_file(s, dir / "t.txt");
  const auto back = load_seed_file(dir / "t.txt");
  CHECK(back.entries == s.entries);
  CHECK_THROWS_AS(load_seed_file(dir.write("b.txt", "collectivism\nx\n")), InputError);
  CHECK_THROWS_AS(load_seed_file(dir.write("e.txt", "construct:x\n")), InputError);
  CHECK_THROWS_AS(make_seed_set("c", {"Role", "role"}), InputError);
}

TEST_CASE("synonym expansion") {
  const auto t = table_of({{"shame", {1, 0, 0}},
                           {"disgrace", {0.95f, 0.2f, 0}},
                           {"shameful", {0.9f, 0, 0.3f}},
                           {"pity", {0.85f, 0.3f, 0.1f}},
                           {"banana", {0, 1, 0}}});
  const auto seeds = make_seed_set("c", {"shame"});
  const auto e = synonym_expand(t, seeds, 0.75);
  CHECK(words_of(e) == std::vector<std::string>{"disgrace", "pity", "shameful"});
  for (const auto& x : e) {
    CHECK(x.source == "shame");
    CHECK(x.origin == Origin::synonym);
    CHECK(x.weight < 1.0);
    CHECK(x.weight == doctest::Approx(cosine(t.vector_of(*t.find(x.word)), t.vector_of(0))).epsilon(1e-7));
  }
  CHECK(synonym_expand(t, seeds, 0.999).empty());
}

TEST_CASE("synonym expansion on the toy vocabulary equals brute force") {
  const auto t = table_of({{"w1", {1, 0}}, {"w2", {0.9f, 0.1f}}, {"w3", {0, 1}}});
  const auto e = synonym_expand(t, make_seed_set("c", {"w1"}), 0.9);
  REQUIRE(e.size() == 1);
  CHECK(e[0].word == "w2");
  CHECK(e[0].weight == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-7));
}

TEST_CASE("concept expansion") {
  const auto t = table_of({{"a", {1, 0}}, {"b", {0, 1}}, {"ab", {1, 1}}, {"neg", {-1, 0.1f}}});
  const auto e = concept_expand(t, make_seed_set("c", {"a", "b"}), 0.45);
  REQUIRE(e.size() == 1);
  CHECK(e[0].word == "ab");
  CHECK(e[0].weight == kMaxExpansionWeight);
  CHECK(e[0].source == "centroid");
  CHECK(e[0].origin == Origin::concept_expansion);
}

TEST_CASE("single seed: concept expansion matches synonym expansion") {
  std::mt19937_64 gen(4);
  std::normal_distribution<float> nd;
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({"w" + std::to_string(i), {nd(gen), nd(gen), nd(gen)}});
  const auto t = table_of(rows);
  const auto seeds = make_seed_set("c", {"w7"});
  const auto syn = synonym_expand(t, seeds, 0.6);
  const auto con = concept_expand(t, seeds, 0.6);
  REQUIRE(syn.size() == con.size());
  CHECK(words_of(syn) == words_of(con));
}

TEST_CASE("expansion: underscore tokens become phrases, unresolvable seeds") {
  const auto t = table_of({{"fit", {1, 0}}, {"in", {0, 1}}, {"fit_in", {0.7f, 0.7f}}, {"belong", {0.69f, 0.72f}}});
  const auto seeds = make_seed_set("c", {"fit in"});
  const auto e = synonym_expand(t, seeds, 0.9);
  CHECK(words_of(e) == std::vector<std::string>{"belong"});

  const auto t2 = table_of({{"x", {1, 0}}, {"fit_out", {0.99f, 0.01f}}});
  const auto e2 = synonym_expand(t2, make_seed_set("c", {"x"}), 0.9);
  REQUIRE(e2.size() == 1);
  CHECK(e2[0].word == "fit out");

  const auto bad = make_seed_set("c", {"x", "missing"});
  CHECK_THROWS_AS(synonym_expand(t2, bad, 0.9), InputError);
  std::vector<std::string> warnings;
  ExpansionOptions opts;
  opts.skip_unresolvable = true;
  CHECK_NOTHROW(synonym_expand(t2, bad, 0.9, opts, &warnings));
  CHECK(warnings.size() == 1);
}

TEST_CASE("top-k cap") {
  const auto t = table_of({{"s", {1, 0}}, {"a", {0.99f, 0.1f}}, {"b", {0.98f, 0.2f}}, {"c", {0.97f, 0.25f}}});
  ExpansionOptions opts;
  opts.top_k = 2;
  CHECK(synonym_expand(t, make_seed_set("c", {"s"}), 0.5, opts).size() == 2);
}

TEST_CASE("merge rules") {
  const std::vector<LexiconEntry> seeds{{"duty", 1.0, Origin::seed, "duty"}};
  const std::vector<LexiconEntry> syn{{"honor", 0.81, Origin::synonym, "duty"}, {"duty", 0.9, Origin::synonym, "x"}};
  const std::vector<LexiconEntry> con{{"honor", 0.77, Origin::concept_expansion, "centroid"},
                                      {"tribe", 0.6, Origin::concept_expansion, "centroid"}};
  const auto lex = merge_entries("c", seeds, syn, con);
  CHECK(lex.size() == 3);
  CHECK(lex.entries.at("honor").weight == 0.81);
  CHECK(lex.entries.at("duty").origin == Origin::seed);
  CHECK(lex.entries.at("duty").weight == 1.0);

  const std::vector<LexiconEntry> tie_syn{{"w", 0.5, Origin::synonym, "a"}};
  const std::vector<LexiconEntry> tie_con{{"w", 0.5, Origin::concept_expansion, "centroid"}};
  CHECK(merge_entries("c", {}, tie_syn, tie_con).entries.at("w").origin == Origin::synonym);
  CHECK(merge_entries("c", {}, tie_con, tie_syn).entries.at("w").origin == Origin::synonym);

  // Commutative in the expansion arguments, idempotent, disjoint sizes add.
  CHECK(merge_entries("c", seeds, syn, con).entries == merge_entries("c", seeds, con, syn).entries);
  std::vector<LexiconEntry> again;
  for (const auto& [w, e] : lex.entries) again.push_back(e);
  CHECK(merge_entries("c", {}, again, again).entries == lex.entries);
  CHECK(merge_entries("c", seeds, {{"x", 0.3, Origin::synonym, "d"}}, {}).size() == 2);
}

TEST_CASE("frequency pruning reasons") {
  const std::vector<std::string> w{"flat", "good", "rare"};
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 12; ++r) rows.push_back({5, static_cast<double>(1 + r % 4), r == 0 ? 1.0 : 0.0});
  const auto rc = counts_from(w, rows);
  const auto lex = lex_of({{"flat", 0.8}, {"good", 1.0}, {"rare", 0.9}, {"absent", 0.7}});
  FrequencyFloors floors;
  const auto out = frequency_prune(lex, rc, floors);
  CHECK(out.lexicon.size() == 1);
  CHECK(out.lexicon.contains("good"));
  std::map<std::string, std::string> reasons;
  for (const auto& r : out.removals) reasons[r.word] = r.reason;
  CHECK(reasons.at("absent") == "zero-occurrence");
  CHECK(reasons.at("flat") == "zero-variance");
  CHECK(reasons.at("rare") == "below-min-regions");

  floors.min_regions = 0;
  floors.min_rel_freq = 0.01;
  const auto by_freq = frequency_prune(lex, rc, floors);
  CHECK_FALSE(by_freq.lexicon.contains("rare"));

  const auto t = table_of({{"good", {1, 0}}, {"flat", {0, 1}}, {"rare", {1, 1}}});
  FrequencyFloors by_rank;
  by_rank.min_regions = 0;
  by_rank.min_rel_freq = 0;
  by_rank.max_embedding_rank = 1;
  const auto ranked = frequency_prune(lex_of({{"good", 1.0}, {"rare", 0.9}}), rc, by_rank, &t);
  CHECK(ranked.lexicon.size() == 1);
  CHECK(ranked.lexicon.contains("good"));
}

TEST_CASE("purify: anti-correlated word goes first") {
  const std::vector<std::string> w{"A", "B", "C"};
  const auto rc = counts_from(w, {{1, 2, 8}, {2, 3, 6}, {3, 5, 4}, {4, 6, 2}});
  const auto out = purify(lex_of({{"A", 1.0}, {"B", 1.0}, {"C", 1.0}}), rc, 0.15);
  REQUIRE(out.removals.size() == 1);
  CHECK(out.removals[0].word == "C");
  CHECK(out.removals[0].statistic < 0);
  CHECK(out.lexicon.contains("A"));
  CHECK(out.lexicon.contains("B"));
}

TEST_CASE("purify: positively correlated words survive theta 0") {
  const std::vector<std::string> w{"a", "b", "c", "d"};
  std::vector<std::vector<double>> rows;
  for (int r = 1; r <= 8; ++r) rows.push_back({1.0 * r, 2.0 * r + 1, 0.5 * r + (r % 2), 3.0 * r});
  const auto out = purify(lex_of({{"a", 1.0}, {"b", 0.9}, {"c", 0.8}, {"d", 0.7}}), counts_from(w, rows), 0.0);
  CHECK(out.removals.empty());
  CHECK(out.lexicon.size() == 4);
}

TEST_CASE("purify: tie-breaks and guards") {
  // Constant columns have an undefined statistic, counted as 0, so they tie;
  // the lower weight goes first, then the smaller word.
  const std::vector<std::string> w{"a", "b", "x", "y"};
  const auto rc = counts_from(w, {{10, 10, 3, 3}, {20, 21, 3, 3}, {30, 29, 3, 3}, {40, 41, 3, 3}});
  const auto out = purify(lex_of({{"a", 1.0}, {"b", 1.0}, {"x", 0.9}, {"y", 0.8}}), rc, 0.5);
  REQUIRE_FALSE(out.removals.empty());
  CHECK(out.removals[0].word == "y");
  const auto tie2 = purify(lex_of({{"a", 1.0}, {"b", 1.0}, {"x", 0.8}, {"y", 0.8}}), rc, 0.5);
  CHECK(tie2.removals[0].word == "x");

  CHECK_THROWS_AS(purify(lex_of({{"a", 1.0}, {"b", 1.0}}), counts_from({"a", "b"}, {{1, 2}, {2, 1}}), 0.1),
                  NumericError);
}

TEST_CASE("purify is idempotent and leaves only passing words") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n_words = 4 + trial % 8, n_regions = 6 + trial % 10;
    std::vector<std::string> w;
    Lexicon lex;
    lex.construct = "c";
    for (std::size_t c = 0; c < n_words; ++c) {
      w.push_back("w" + std::to_string(c));
      lex.entries[w.back()] = {w.back(), 0.5 + 0.05 * static_cast<double>(c % 5), Origin::synonym, "s"};
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < n_regions; ++r) {
      const double latent = nd(gen);
      std::vector<double> row;
      for (std::size_t c = 0; c < n_words; ++c) {
        const double load = c % 3 == 2 ? -1.0 : 1.0;
        row.push_back(std::max(0.0, std::round(50 + 10 * load * latent + 8 * nd(gen))));
      }
      rows.push_back(row);
    }
    const auto rc = counts_from(w, rows);
    const double theta = 0.05 * (trial % 5);
    const auto once = purify(lex, rc, theta);
    const auto twice = purify(once.lexicon, rc, theta);
    CHECK(twice.lexicon.entries == once.lexicon.entries);
    CHECK(twice.removals.empty());
    if (once.lexicon.size() > 2) {
      const auto m = weighted_frequency_matrix(once.lexicon, rc);
      std::vector<std::size_t> all(m.cols());
      std::iota(all.begin(), all.end(), 0);
      for (double r : internal_correlations(m, all)) CHECK(r >= theta);
    }
  }
}

TEST_CASE("build: defaults, degenerate seeds-only, monotone thresholds") {
  const auto t = table_of({{"duty", {1, 0, 0}},
                           {"role", {0.9f, 0.3f, 0}},
                           {"task", {0.85f, 0.2f, 0.2f}},
                           {"obligation", {0.95f, 0.1f, 0.05f}},
                           {"beach", {0, 0, 1}},
                           {"sun", {0.1f, 0, 1}}});
  const auto seeds = make_seed_set("collectivism", {"duty", "role"});
  const std::vector<std::string> w{"duty", "role", "task", "obligation", "beach", "sun"};
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < 15; ++r) {
    const double s = r;
    rows.push_back({10 + s, 5 + s, 3 + s, 4 + 0.5 * s + (r % 3), 20 - s, 7.0 + (r % 2)});
  }
  const auto rc = counts_from(w, rows);

  BuildConfig def;
  const auto full = build_lexicon(def, t, seeds, rc);
  CHECK(full.lexicon.contains("duty"));
  CHECK(full.lexicon.contains("obligation"));
  CHECK(full.report.stage_sizes.at("1_seeds") == 2);
  for (const auto& [word, e] : full.lexicon.entries) {
    CHECK(e.weight > 0.0);
    CHECK(e.weight <= 1.0);
    CHECK((e.weight == 1.0) == (e.origin == Origin::seed));
  }
  const auto json = full.report.to_json(def);
  CHECK(json.find("\"6_after_purify\"") != std::string::npos);

  BuildConfig degenerate;
  degenerate.tau_syn = degenerate.tau_con = 0.999;
  degenerate.floors.min_regions = 0;
  degenerate.floors.min_rel_freq = 0;
  const auto base = build_lexicon(degenerate, t, seeds, rc);
  CHECK(base.lexicon.size() == 2);

  std::size_t last = SIZE_MAX;
  for (double tau : {0.3, 0.5, 0.7, 0.9, 0.99}) {
    BuildConfig c;
    c.tau_syn = tau;
    c.tau_con = tau;
    const auto size = expand_lexicon(c, t, seeds).lexicon.size();
    CHECK(size <= last);
    last = size;
  }

  BuildConfig invalid;
  invalid.tau_syn = 1.0;
  CHECK_THROWS_AS(validate(invalid), ConfigError);
  invalid = {};
  invalid.theta = -0.1;
  CHECK_THROWS_AS(validate(invalid), ConfigError);
}

TEST_CASE("lexicon csv sorted by weight then word, round trip") {
  TempDir dir;
  auto lex = lex_of({{"b", 0.5}, {"a", 0.5}, {"seed", 1.0}});
  save_lexicon(lex, dir / "l.csv");
  const auto text = kgl_test::slurp(dir / "l.csv");
  CHECK(text.rfind("word,weight,origin,source\nseed,1,seed,s\na,0.5,synonym-expansion,s\nb,", 0) == 0);
  const auto back = load_lexicon(dir / "l.csv", "c");
  CHECK(back.entries == lex.entries);
}
