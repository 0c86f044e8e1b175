// Command-line entry point: kgl <build|score|validate|ablate|interpolate|synth> [options]

#include <iostream>

#include "CLI11.hpp"

#include "kgl/app.hpp"
#include "kgl/error.hpp"
#include "kgl/util.hpp"

namespace {

struct PathFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr PathFlag kPathFlags[] = {
    {"--embeddings", "paths.embeddings", "embedding text file"},
    {"--seeds", "paths.seeds", "comma-separated seed files"},
    {"--corpus", "paths.corpus", "region_id<TAB>text corpus"},
    {"--counts", "paths.counts", "precomputed region_id,word,count CSV"},
    {"--indicators", "paths.indicators", "state indicator CSV"},
    {"--features", "paths.features", "county feature CSV for interpolation"},
    {"--county-state", "paths.county_state", "fips,code county to state map"},
    {"--communities", "paths.communities", "fips,code county to community map"},
    {"--boundaries", "paths.boundaries", "county boundary GeoJSON"},
    {"--out", "paths.output", "output directory"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-guided lexicon induction and regional scoring"};
  app.set_version_flag("--version", kgl::app::kToolVersion);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string construct;
  int threads = 0;
  std::map<std::string, std::string> path_values;

  const std::pair<const char*, const char*> commands[] = {
      {"build", "expand, prune and purify lexica"},
      {"score", "score regions with built lexica"},
      {"validate", "correlate state scores with indicators"},
      {"ablate", "threshold ablation grids"},
      {"interpolate", "Gaussian-process interpolation of missing counties"},
      {"synth", "write a synthetic dataset with planted ground truth"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "INI config file");
    sub->add_option("--set", sets, "override section.key=value (repeatable)");
    sub->add_option("--construct", construct, "restrict to one construct");
    sub->add_option("--threads", threads, "worker thread cap (0 = all cores)");
    for (const auto& f : kPathFlags) sub->add_option(f.flag, path_values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(kgl::ErrorKind::config);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || s.find('.') > eq) {
        throw kgl::ConfigError("--set expects section.key=value, got '" + s + "'");
      }
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : path_values) {
      if (!value.empty()) overrides.emplace_back(key, value);
    }
    // Paths typed on the command line are relative to the working directory,
    // not to the config file.
    for (auto& [key, value] : overrides) {
      if (key.rfind("paths.", 0) != 0) continue;
      std::string joined;
      for (const auto& part : kgl::split(value, ',')) {
        const std::string item(kgl::trim(part));
        if (!joined.empty()) joined += ',';
        joined += item.empty() ? std::string() : std::filesystem::absolute(item).lexically_normal().string();
      }
      value = joined;
    }
    if (!construct.empty()) overrides.emplace_back("run.construct", construct);
    if (threads != 0) overrides.emplace_back("run.threads", std::to_string(threads));

    std::optional<std::filesystem::path> ini;
    if (!config_path.empty()) ini = config_path;
    const auto config = kgl::app::load_config(ini, overrides);
    return kgl::app::run(command, config);
  } catch (const kgl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(kgl::ErrorKind::input);
  }
}
