#pragma once

// Subcommand drivers behind the `kgl` executable.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgl/gp.hpp"
#include "kgl/lexicon.hpp"
#include "kgl/scoring.hpp"
#include "kgl/synthkit.hpp"

namespace kgl::app {

inline constexpr const char* kToolVersion = "kgl 1.0.0";

struct RunConfig {
  // [paths]
  std::filesystem::path embeddings;
  std::vector<std::filesystem::path> seeds;
  std::filesystem::path corpus;  // region_id<TAB>text
  std::filesystem::path counts;  // precomputed region,word CSV
  std::filesystem::path indicators;
  std::filesystem::path features;
  std::filesystem::path county_state;
  std::filesystem::path communities;
  std::filesystem::path boundaries;
  std::filesystem::path output = "kgl_out";

  // [lexicon]
  BuildConfig build;
  std::int64_t min_docs = 100;

  // [scoring]
  bool zscore = false;
  bool diff_raw = false;
  std::size_t min_community_counties = 40;

  // [validate]
  std::vector<std::string> primary_indicators;
  std::map<std::string, int> directions;  // construct -> +1 / -1
  std::size_t n_boot = 10000;
  std::uint64_t boot_seed = 1;

  // [gp]
  GPConfig gp;
  std::string gp_target = "diff";
  double holdout_fraction = 0.0;

  // [ablate]
  std::vector<double> grid_tau_syn{0.7, 0.75, 0.8};
  std::vector<double> grid_tau_con{0.4, 0.45, 0.5};
  std::vector<double> grid_theta{0.0, 0.05, 0.1, 0.15, 0.2};

  // [synth]
  synth::SynthSpec synth;

  std::optional<std::string> only_construct;
  int threads = 0;

  // Flattened `section.key = value` view echoed into the manifest.
  std::map<std::string, std::string> effective;
};

// Reads an INI file (sections paths, lexicon, scoring, validate, gp, ablate,
// synth) and applies `section.key=value` overrides on top. Relative paths
// resolve against the config file's directory.
RunConfig load_config(const std::optional<std::filesystem::path>& ini,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

// Each returns the process exit code. Errors are reported on stderr and
// mapped to 2 (config), 3 (input) or 4 (numeric).
int cmd_build(const RunConfig& config);
int cmd_score(const RunConfig& config);
int cmd_validate(const RunConfig& config);
int cmd_ablate(const RunConfig& config);
int cmd_interpolate(const RunConfig& config);
int cmd_synth(const RunConfig& config);

int run(const std::string& command, const RunConfig& config);

}  // namespace kgl::app
