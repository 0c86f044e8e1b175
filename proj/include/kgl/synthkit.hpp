#pragma once

// Synthetic datasets with planted ground truth for end-to-end checks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgl/corpus.hpp"
#include "kgl/embedding_store.hpp"
#include "kgl/gp.hpp"
#include "kgl/lexicon.hpp"
#include "kgl/scoring.hpp"
#include "kgl/stats.hpp"

namespace kgl::synth {

struct SynthSpec {
  std::size_t n_regions = 30;
  std::size_t n_constructs = 2;
  std::size_t words_per_construct = 10;
  std::size_t vocab_size = 2000;
  std::size_t dim = 32;
  double signal_strength = 1.0;
  double noise_vocab_fraction = 1.0;  // share of filler vocabulary used in documents
  std::size_t confounder_count = 3;   // per construct
  std::uint64_t seed = 7;

  std::size_t docs_per_region = 200;
  std::size_t tokens_per_doc = 15;
  std::size_t regions_per_state = 2;
  std::size_t seeds_per_construct = 5;
  // Expected construct-word tokens per document at planted score 0.5.
  double construct_rate = 0.1;
  double confounder_rate = 0.05;
};

// Throws ConfigError for an inconsistent or geometrically infeasible spec.
void validate(const SynthSpec& spec);

struct SynthData {
  SynthSpec spec;
  std::vector<std::string> constructs;
  EmbeddingTable embeddings;
  std::vector<Document> documents;
  // construct -> planted word list; first seeds_per_construct are the seeds.
  std::map<std::string, std::vector<std::string>> planted_words;
  std::map<std::string, std::vector<std::string>> confounders;
  std::vector<SeedSet> seeds;
  std::vector<std::string> regions;
  // construct -> region -> planted prevalence in [0, 1]
  std::map<std::string, std::map<std::string, double>> truth;
  RegionMap county_state;
  RegionMap communities;
  IndicatorTable indicators;
  std::vector<std::string> primary_indicators;
  std::vector<FeatureRow> features;
};

std::vector<std::string> construct_names(std::size_t n);

SynthData generate(const SynthSpec& spec);

// Writes embeddings.txt, corpus.tsv, truth.csv, seeds_<construct>.txt,
// indicators.csv, county_state.csv, communities.csv, features.csv and a
// ready-to-run config.ini.
void write_dataset(const SynthData& data, const std::filesystem::path& dir);

// Smooth field over (lat, lon) and socio features for interpolation checks.
struct Field {
  std::vector<FeatureRow> features;
  std::map<std::string, double> values;
};
Field generate_field(std::size_t n_regions, std::uint64_t seed);

}  // namespace kgl::synth
