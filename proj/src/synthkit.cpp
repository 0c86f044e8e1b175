#include "kgl/synthkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/rng.hpp"
#include "kgl/util.hpp"

namespace kgl::synth {

namespace {

// Weight of the construct anchor in every cluster word. With a = 0.96,
// within-cluster cosine >= 2a^2 - 1 = 0.843 and cross-cluster <= 1 - a^2.
constexpr double kAnchor = 0.96;

struct StateCode {
  const char* postal;
  int fips;
};

constexpr StateCode kStates[] = {
    {"AL", 1},  {"AK", 2},  {"AZ", 4},  {"AR", 5},  {"CA", 6},  {"CO", 8},  {"CT", 9},  {"DE", 10}, {"FL", 12},
    {"GA", 13}, {"HI", 15}, {"ID", 16}, {"IL", 17}, {"IN", 18}, {"IA", 19}, {"KS", 20}, {"KY", 21}, {"LA", 22},
    {"ME", 23}, {"MD", 24}, {"MA", 25}, {"MI", 26}, {"MN", 27}, {"MS", 28}, {"MO", 29}, {"MT", 30}, {"NE", 31},
    {"NV", 32}, {"NH", 33}, {"NJ", 34}, {"NM", 35}, {"NY", 36}, {"NC", 37}, {"ND", 38}, {"OH", 39}, {"OK", 40},
    {"OR", 41}, {"PA", 42}, {"RI", 44}, {"SC", 45}, {"SD", 46}, {"TN", 47}, {"TX", 48}, {"UT", 49}, {"VT", 50},
    {"VA", 51}, {"WA", 53}, {"WV", 54}, {"WI", 55}, {"WY", 56}};
constexpr std::size_t kStateCount = sizeof(kStates) / sizeof(kStates[0]);

std::string fips_code(int state_fips, std::size_t county) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d%03zu", state_fips, 2 * county + 1);
  return buf;
}

// Pronounceable lowercase pseudo-words, unique across the whole vocabulary.
class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}
  std::string next() {
    static constexpr const char* onset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                            "br", "dr", "kl", "pr", "st", "tr", "sh", "ch"};
    static constexpr const char* vowel[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea"};
    for (;;) {
      const auto syllables = 2 + rng_.below(3);
      std::string w;
      for (std::uint64_t s = 0; s < syllables; ++s) {
        w += onset[rng_.below(std::size(onset))];
        w += vowel[rng_.below(std::size(vowel))];
      }
      if (rng_.below(3) == 0) w += "n";
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::vector<double> random_unit(Rng& rng, std::size_t dim, std::size_t first) {
  std::vector<double> v(dim, 0.0);
  double n = 0.0;
  while (n < 1e-6) {
    n = 0.0;
    for (std::size_t k = first; k < dim; ++k) {
      v[k] = rng.normal();
      n += v[k] * v[k];
    }
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct Place {
  std::string region;
  std::string state;
  double lat = 0.0, lon = 0.0;
  double field = 0.0;  // planted prevalence of the first construct
  FeatureRow features;
};

double smooth_field(double lat, double lon) {
  return 0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * (lon + 120.0) / 45.0) +
         0.2 * std::cos(2.0 * std::numbers::pi * (lat - 30.0) / 18.0);
}

FeatureRow socio_features(const std::string& region, double lat, double lon, double s, Rng& rng) {
  FeatureRow f;
  f.region = region;
  f.lat = lat;
  f.lon = lon;
  const auto pct = [](double v) { return std::clamp(v, 0.0, 100.0); };
  f.socio = {std::max(15000.0, 72000.0 - 26000.0 * s + 4000.0 * rng.normal()),
             pct(42.0 - 22.0 * s + 3.0 * rng.normal()),
             pct(4.0 + 2.0 * s + 0.8 * rng.normal()),
             pct(93.0 - 8.0 * s + 1.5 * rng.normal()),
             std::exp(5.0 - 2.0 * s + 0.6 * rng.normal()),
             38.0 + 6.0 * s + 2.0 * rng.normal(),
             pct(15.0 + 55.0 * s + 6.0 * rng.normal()),
             pct(5.0 + 30.0 * rng.uniform()),
             pct(50.5 + 0.6 * rng.normal()),
             pct(45.0 + 12.0 * s + 3.0 * rng.normal()),
             pct(2.0 + 30.0 * s * rng.uniform())};
  return f;
}

std::vector<Place> make_places(std::size_t n, std::size_t per_state, Rng& rng) {
  std::vector<Place> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& st = kStates[(i / per_state) % kStateCount];
    const auto county = i % per_state + per_state * (i / (per_state * kStateCount));
    Place p;
    p.region = fips_code(st.fips, county);
    p.state = st.postal;
    p.lat = rng.uniform(30.0, 48.0);
    p.lon = rng.uniform(-120.0, -75.0);
    p.field = clamp01(smooth_field(p.lat, p.lon) + 0.08 * rng.normal());
    p.features = socio_features(p.region, p.lat, p.lon, p.field, rng);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<std::string> construct_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < n; ++c) {
    if (c == 0) out.emplace_back("collectivism");
    else if (c == 1) out.emplace_back("individualism");
    else out.push_back("construct" + std::to_string(c + 1));
  }
  return out;
}

void validate(const SynthSpec& spec) {
  if (spec.n_regions < 3) throw ConfigError("synth: n_regions must be >= 3");
  if (spec.n_constructs < 1) throw ConfigError("synth: n_constructs must be >= 1");
  if (spec.words_per_construct < 1) throw ConfigError("synth: words_per_construct must be >= 1");
  if (spec.seeds_per_construct < 1 || spec.seeds_per_construct > spec.words_per_construct) {
    throw ConfigError("synth: seeds_per_construct must lie in [1, words_per_construct]");
  }
  if (spec.dim < 2) throw ConfigError("synth: dim must be >= 2");
  if (spec.dim < spec.n_constructs + 2) {
    throw ConfigError("synth: dim " + std::to_string(spec.dim) + " cannot hold " + std::to_string(spec.n_constructs) +
                      " separated clusters; use dim >= " + std::to_string(spec.n_constructs + 2));
  }
  const auto planted = spec.n_constructs * (spec.words_per_construct + spec.confounder_count);
  if (spec.vocab_size < planted + 1) {
    throw ConfigError("synth: vocab_size must exceed the " + std::to_string(planted) + " planted words");
  }
  if (!(spec.signal_strength >= 0.0)) throw ConfigError("synth: signal_strength must be >= 0");
  if (!(spec.noise_vocab_fraction >= 0.0 && spec.noise_vocab_fraction <= 1.0)) {
    throw ConfigError("synth: noise_vocab_fraction must lie in [0,1]");
  }
  if (spec.regions_per_state < 1 || spec.regions_per_state > 499) {
    throw ConfigError("synth: regions_per_state must lie in [1, 499]");
  }
  if (spec.tokens_per_doc < 1 || spec.docs_per_region < 1) throw ConfigError("synth: empty documents requested");
  const double per_token = (spec.construct_rate + spec.confounder_rate) * (1.0 + spec.signal_strength) *
                           static_cast<double>(spec.n_constructs) / static_cast<double>(spec.tokens_per_doc);
  if (per_token > 1.0) throw ConfigError("synth: construct and confounder rates exceed one token per slot");
}

SynthData generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed, 1);
  SynthData data;
  data.spec = spec;
  data.constructs = construct_names(spec.n_constructs);
  const std::size_t C = spec.n_constructs;

  // Vocabulary and geometry.
  WordMaker words(rng);
  const std::size_t n_planted = C * (spec.words_per_construct + spec.confounder_count);
  const std::size_t n_filler = spec.vocab_size - n_planted;
  std::vector<std::string> vocab;
  std::vector<float> vectors;
  const auto add_word = [&](const std::string& w, const std::vector<double>& v) {
    vocab.push_back(w);
    for (double x : v) vectors.push_back(static_cast<float>(x));
  };
  std::vector<std::string> fillers;
  for (std::size_t i = 0; i < n_filler; ++i) {
    fillers.push_back(words.next());
    add_word(fillers.back(), random_unit(rng, spec.dim, C));
  }
  const double tail = std::sqrt(1.0 - kAnchor * kAnchor);
  for (std::size_t c = 0; c < C; ++c) {
    const auto& name = data.constructs[c];
    for (std::size_t k = 0; k < spec.words_per_construct + spec.confounder_count; ++k) {
      auto v = random_unit(rng, spec.dim, C);
      for (auto& x : v) x *= tail;
      v[c] = kAnchor;
      const auto w = words.next();
      add_word(w, v);
      (k < spec.words_per_construct ? data.planted_words[name] : data.confounders[name]).push_back(w);
    }
    std::vector<std::string> seed_words(data.planted_words[name].begin(),
                                        data.planted_words[name].begin() +
                                            static_cast<std::ptrdiff_t>(spec.seeds_per_construct));
    data.seeds.push_back(make_seed_set(name, seed_words));
  }
  data.embeddings = EmbeddingTable(vocab, spec.dim, std::move(vectors));

  // Check the planted cluster geometry on the stored (float) vectors.
  for (std::size_t a = 0; a < C; ++a) {
    for (std::size_t b = a; b < C; ++b) {
      auto wa = data.planted_words[data.constructs[a]];
      auto wb = data.planted_words[data.constructs[b]];
      for (const auto& x : wa) {
        for (const auto& y : wb) {
          if (x == y) continue;
          const double cs = cosine(data.embeddings.vector_of(*data.embeddings.find(x)),
                                   data.embeddings.vector_of(*data.embeddings.find(y)));
          if ((a == b && cs < 0.8) || (a != b && cs > 0.3)) {
            throw ConfigError("synth: cluster geometry violated; increase dim");
          }
        }
      }
    }
  }

  // Regions, planted prevalence and side tables.
  const std::size_t extra = spec.n_regions / 3;
  auto places = make_places(spec.n_regions + extra, spec.regions_per_state, rng);
  for (std::size_t i = 0; i < places.size(); ++i) {
    const auto& p = places[i];
    data.county_state[p.region] = p.state;
    data.features.push_back(p.features);
    data.communities[p.region] = acp_labels()[rng.below(acp_labels().size())];
    if (i >= spec.n_regions) continue;
    data.regions.push_back(p.region);
    for (std::size_t c = 0; c < C; ++c) {
      double s = p.field;
      if (c > 0) s = c % 2 ? 0.8 * (1.0 - p.field) + 0.2 * rng.uniform() : 0.8 * p.field + 0.2 * rng.uniform();
      data.truth[data.constructs[c]][p.region] = clamp01(s);
    }
  }

  // Documents.
  const std::size_t used_fillers = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(spec.noise_vocab_fraction * static_cast<double>(n_filler))));
  std::vector<double> zipf_cdf(used_fillers);
  double acc = 0.0;
  for (std::size_t i = 0; i < used_fillers; ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    zipf_cdf[i] = acc;
  }
  for (auto& z : zipf_cdf) z /= acc;
  const auto draw_filler = [&]() -> const std::string& {
    const auto it = std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), rng.uniform());
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - zipf_cdf.begin()), used_fillers - 1);
    return fillers[idx];
  };

  const double slots = static_cast<double>(spec.tokens_per_doc);
  data.documents.reserve(spec.n_regions * spec.docs_per_region);
  for (const auto& region : data.regions) {
    // Cumulative per-slot probabilities: construct words, then confounders.
    std::vector<double> cut;
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double s = data.truth[data.constructs[c]][region];
      total += spec.construct_rate / slots * (1.0 + spec.signal_strength * (2.0 * s - 1.0));
      cut.push_back(total);
      total += spec.confounder_rate / slots * (1.0 + spec.signal_strength * (1.0 - 2.0 * s));
      cut.push_back(total);
    }
    for (std::size_t d = 0; d < spec.docs_per_region; ++d) {
      std::string text;
      for (std::size_t t = 0; t < spec.tokens_per_doc; ++t) {
        const double u = rng.uniform();
        const auto bucket = static_cast<std::size_t>(std::upper_bound(cut.begin(), cut.end(), u) - cut.begin());
        std::string word;
        if (bucket < cut.size()) {
          const auto& name = data.constructs[bucket / 2];
          const auto& pool = bucket % 2 == 0 ? data.planted_words[name] : data.confounders[name];
          word = pool[rng.below(pool.size())];
        } else {
          word = draw_filler();
        }
        if (t == 0 && rng.below(4) == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
        if (!text.empty()) text.push_back(' ');
        text += word;
      }
      switch (rng.below(8)) {
        case 0: text += "!"; break;
        case 1: text += "."; break;
        case 2: text += " https://t.co/x" + std::to_string(rng.below(1000)); break;
        case 3: text = "@user" + std::to_string(rng.below(1000)) + " " + text; break;
        default: break;
      }
      data.documents.push_back({region, std::move(text)});
    }
  }

  // State indicators driven by the first construct's planted prevalence.
  std::map<std::string, std::pair<double, std::size_t>> state_field;
  for (const auto& region : data.regions) {
    auto& [sum, n] = state_field[data.county_state[region]];
    sum += data.truth[data.constructs[0]][region];
    ++n;
  }
  struct Indicator {
    const char* name;
    double offset, scale, noise;
  };
  static constexpr Indicator kIndicators[] = {
      {"vandello_cohen", 40.0, 40.0, 0.05}, {"grandparents", 3.0, 6.0, 0.06}, {"religiosity", 35.0, 30.0, 0.06},
      {"ingroup_bias", 0.2, 0.5, 0.07},     {"fertility", 1.9, 0.0, 1.0},    {"transport", 4.0, 0.0, 1.0},
      {"median_income", 85000.0, -30000.0, 0.08}};
  for (const auto& ind : kIndicators) data.indicators.names.emplace_back(ind.name);
  data.indicators.columns.assign(std::size(kIndicators), {});
  for (const auto& [state, sn] : state_field) {
    const double s = sn.first / static_cast<double>(sn.second);
    data.indicators.units.push_back(state);
    for (std::size_t j = 0; j < std::size(kIndicators); ++j) {
      const auto& ind = kIndicators[j];
      const double v = ind.scale == 0.0 ? ind.offset * (1.0 + 0.1 * rng.normal())
                                        : ind.offset + ind.scale * (s + ind.noise * rng.normal());
      data.indicators.columns[j].push_back(v);
    }
  }
  data.primary_indicators = {"vandello_cohen", "grandparents", "religiosity", "ingroup_bias"};
  return data;
}

void write_dataset(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_embeddings(data.embeddings, dir / "embeddings.txt");

  std::string corpus;
  for (const auto& d : data.documents) {
    corpus += d.region;
    corpus.push_back('\t');
    corpus += d.text;
    corpus.push_back('\n');
  }
  write_file(dir / "corpus.tsv", corpus);

  CsvWriter truth({"region_id", "construct", "planted"});
  for (const auto& [construct, by_region] : data.truth) {
    for (const auto& [region, v] : by_region) truth.row({region, construct, format_double(v)});
  }
  truth.save(dir / "truth.csv");

  CsvWriter planted({"construct", "word", "role"});
  for (const auto& name : data.constructs) {
    const auto& words = data.planted_words.at(name);
    for (std::size_t i = 0; i < words.size(); ++i) {
      planted.row({name, words[i], i < data.spec.seeds_per_construct ? "seed" : "planted"});
    }
    for (const auto& w : data.confounders.at(name)) planted.row({name, w, "confounder"});
  }
  planted.save(dir / "planted_words.csv");

  std::vector<std::string> seed_files;
  for (const auto& s : data.seeds) {
    const auto file = "seeds_" + s.construct + ".txt";
    save_seed_file(s, dir / file);
    seed_files.push_back(file);
  }
  save_indicators(data.indicators, dir / "indicators.csv");

  CsvWriter states({"fips", "code"});
  for (const auto& [fips, state] : data.county_state) states.row({fips, state});
  states.save(dir / "county_state.csv");
  CsvWriter communities({"fips", "code"});
  for (const auto& [fips, label] : data.communities) communities.row({fips, label});
  communities.save(dir / "communities.csv");
  save_features(data.features, dir / "features.csv");

  std::string directions;
  for (std::size_t c = 0; c < data.constructs.size(); ++c) {
    if (c) directions += ",";
    directions += data.constructs[c] + (c % 2 ? ":-1" : ":+1");
  }
  std::string ini;
  ini += "# Generated by `kgl synth` (seed " + std::to_string(data.spec.seed) + ")\n";
  ini += "[paths]\n";
  ini += "embeddings = embeddings.txt\n";
  ini += "seeds = " + join(seed_files, ",") + "\n";
  ini += "corpus = corpus.tsv\n";
  ini += "indicators = indicators.csv\n";
  ini += "county_state = county_state.csv\n";
  ini += "communities = communities.csv\n";
  ini += "features = features.csv\n";
  ini += "output = out\n\n";
  ini += "[lexicon]\n";
  ini += "min_docs = " + std::to_string(std::min<std::size_t>(100, data.spec.docs_per_region)) + "\n\n";
  ini += "[scoring]\n";
  ini += "min_community_counties = 2\n\n";
  ini += "[validate]\n";
  ini += "primary = " + join(data.primary_indicators, ",") + "\n";
  ini += "directions = " + directions + "\n";
  ini += "n_boot = 2000\n\n";
  ini += "[gp]\n";
  ini += "target = " + std::string(data.constructs.size() >= 2 ? "diff" : data.constructs[0]) + "\n";
  ini += "iters = 100\n";
  write_file(dir / "config.ini", ini);
}

Field generate_field(std::size_t n_regions, std::uint64_t seed) {
  Rng rng(seed, 2);
  Field out;
  for (auto& p : make_places(n_regions, 10, rng)) {
    out.values[p.region] = p.field;
    out.features.push_back(std::move(p.features));
  }
  return out;
}

}  // namespace kgl::synth
