#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <set>

#include "kgl/app.hpp"
#include "kgl/error.hpp"
#include "kgl/util.hpp"

namespace kgl::app {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "paths.embeddings", "paths.seeds", "paths.corpus", "paths.counts", "paths.indicators", "paths.features",
      "paths.county_state", "paths.communities", "paths.boundaries", "paths.output",
      "lexicon.tau_syn", "lexicon.tau_con", "lexicon.theta", "lexicon.min_regions", "lexicon.min_rel_freq",
      "lexicon.max_embedding_rank", "lexicon.normalization", "lexicon.min_docs", "lexicon.skip_unresolvable",
      "lexicon.top_k",
      "scoring.zscore", "scoring.diff_raw", "scoring.min_community_counties",
      "validate.primary", "validate.directions", "validate.n_boot", "validate.seed",
      "gp.lr", "gp.iters", "gp.jitter", "gp.seed", "gp.target", "gp.holdout_fraction",
      "ablate.tau_syn", "ablate.tau_con", "ablate.theta",
      "synth.n_regions", "synth.n_constructs", "synth.words_per_construct", "synth.vocab_size", "synth.dim",
      "synth.signal_strength", "synth.noise_vocab_fraction", "synth.confounder_count", "synth.seed",
      "synth.docs_per_region", "synth.tokens_per_doc", "synth.regions_per_state", "synth.seeds_per_construct",
      "synth.construct_rate", "synth.confounder_rate",
      "run.construct", "run.threads"};
  return keys;
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = parse_double(v);
  if (!d) throw ConfigError(key + ": '" + v + "' is not a number");
  return *d;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const auto i = parse_int(v);
  if (!i) throw ConfigError(key + ": '" + v + "' is not an integer");
  return *i;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const auto i = to_int(key, v);
  if (i < 0) throw ConfigError(key + ": must be >= 0");
  return static_cast<std::size_t>(i);
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto l = to_lower_ascii(trim(v));
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  for (auto part : split(v, ',')) {
    part = trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

std::vector<double> to_grid(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& p : to_list(v)) out.push_back(to_double(key, p));
  if (out.empty()) throw ConfigError(key + ": grid is empty");
  return out;
}

}  // namespace

RunConfig load_config(const std::optional<fs::path>& ini,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::map<std::string, std::string> values;
  fs::path base = fs::current_path();
  if (ini) {
    if (!fs::exists(*ini)) throw ConfigError("config file not found: " + ini->string());
    pt::ptree tree;
    try {
      pt::read_ini(ini->string(), tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
      for (const auto& [key, value] : body) values[section + "." + key] = value.data();
    }
    base = fs::absolute(*ini).parent_path();
  }
  for (const auto& [k, v] : overrides) values[k] = v;
  for (const auto& [k, v] : values) {
    if (!known_keys().count(k)) throw ConfigError("unknown config key '" + k + "'");
  }

  RunConfig c;
  const auto path_of = [&](const std::string& v) -> fs::path {
    if (v.empty()) return {};
    fs::path p(v);
    return p.is_absolute() ? p : (base / p).lexically_normal();
  };
  const auto get = [&](const std::string& k) -> const std::string* {
    const auto it = values.find(k);
    return it == values.end() ? nullptr : &it->second;
  };

  if (auto v = get("paths.embeddings")) c.embeddings = path_of(*v);
  if (auto v = get("paths.seeds")) {
    for (const auto& s : to_list(*v)) c.seeds.push_back(path_of(s));
  }
  if (auto v = get("paths.corpus")) c.corpus = path_of(*v);
  if (auto v = get("paths.counts")) c.counts = path_of(*v);
  if (auto v = get("paths.indicators")) c.indicators = path_of(*v);
  if (auto v = get("paths.features")) c.features = path_of(*v);
  if (auto v = get("paths.county_state")) c.county_state = path_of(*v);
  if (auto v = get("paths.communities")) c.communities = path_of(*v);
  if (auto v = get("paths.boundaries")) c.boundaries = path_of(*v);
  c.output = path_of(get("paths.output") ? *get("paths.output") : std::string("kgl_out"));

  if (auto v = get("lexicon.tau_syn")) c.build.tau_syn = to_double("lexicon.tau_syn", *v);
  if (auto v = get("lexicon.tau_con")) c.build.tau_con = to_double("lexicon.tau_con", *v);
  if (auto v = get("lexicon.theta")) c.build.theta = to_double("lexicon.theta", *v);
  if (auto v = get("lexicon.min_regions")) c.build.floors.min_regions = to_int("lexicon.min_regions", *v);
  if (auto v = get("lexicon.min_rel_freq")) c.build.floors.min_rel_freq = to_double("lexicon.min_rel_freq", *v);
  if (auto v = get("lexicon.max_embedding_rank")) {
    c.build.floors.max_embedding_rank = to_int("lexicon.max_embedding_rank", *v);
  }
  if (auto v = get("lexicon.normalization")) c.build.normalization = parse_normalization(*v);
  if (auto v = get("lexicon.min_docs")) c.min_docs = to_int("lexicon.min_docs", *v);
  if (auto v = get("lexicon.skip_unresolvable")) {
    c.build.expansion.skip_unresolvable = to_bool("lexicon.skip_unresolvable", *v);
  }
  if (auto v = get("lexicon.top_k")) c.build.expansion.top_k = to_size("lexicon.top_k", *v);

  if (auto v = get("scoring.zscore")) c.zscore = to_bool("scoring.zscore", *v);
  if (auto v = get("scoring.diff_raw")) c.diff_raw = to_bool("scoring.diff_raw", *v);
  if (auto v = get("scoring.min_community_counties")) {
    c.min_community_counties = to_size("scoring.min_community_counties", *v);
    if (c.min_community_counties < 1) throw ConfigError("scoring.min_community_counties must be >= 1");
  }

  if (auto v = get("validate.primary")) c.primary_indicators = to_list(*v);
  if (auto v = get("validate.directions")) {
    for (const auto& item : to_list(*v)) {
      const auto colon = item.rfind(':');
      if (colon == std::string::npos) throw ConfigError("validate.directions: expected construct:+1 or construct:-1");
      const auto sign = to_int("validate.directions", item.substr(colon + 1));
      if (sign != 1 && sign != -1) throw ConfigError("validate.directions: sign must be +1 or -1");
      c.directions[item.substr(0, colon)] = static_cast<int>(sign);
    }
  }
  if (auto v = get("validate.n_boot")) c.n_boot = to_size("validate.n_boot", *v);
  if (auto v = get("validate.seed")) c.boot_seed = static_cast<std::uint64_t>(to_int("validate.seed", *v));

  if (auto v = get("gp.lr")) c.gp.lr = to_double("gp.lr", *v);
  if (auto v = get("gp.iters")) c.gp.iters = static_cast<int>(to_int("gp.iters", *v));
  if (auto v = get("gp.jitter")) c.gp.jitter = to_double("gp.jitter", *v);
  if (auto v = get("gp.seed")) c.gp.seed = static_cast<std::uint64_t>(to_int("gp.seed", *v));
  if (auto v = get("gp.target")) c.gp_target = *v;
  if (auto v = get("gp.holdout_fraction")) c.holdout_fraction = to_double("gp.holdout_fraction", *v);

  if (auto v = get("ablate.tau_syn")) c.grid_tau_syn = to_grid("ablate.tau_syn", *v);
  if (auto v = get("ablate.tau_con")) c.grid_tau_con = to_grid("ablate.tau_con", *v);
  if (auto v = get("ablate.theta")) c.grid_theta = to_grid("ablate.theta", *v);

  auto& s = c.synth;
  if (auto v = get("synth.n_regions")) s.n_regions = to_size("synth.n_regions", *v);
  if (auto v = get("synth.n_constructs")) s.n_constructs = to_size("synth.n_constructs", *v);
  if (auto v = get("synth.words_per_construct")) s.words_per_construct = to_size("synth.words_per_construct", *v);
  if (auto v = get("synth.vocab_size")) s.vocab_size = to_size("synth.vocab_size", *v);
  if (auto v = get("synth.dim")) s.dim = to_size("synth.dim", *v);
  if (auto v = get("synth.signal_strength")) s.signal_strength = to_double("synth.signal_strength", *v);
  if (auto v = get("synth.noise_vocab_fraction")) s.noise_vocab_fraction = to_double("synth.noise_vocab_fraction", *v);
  if (auto v = get("synth.confounder_count")) s.confounder_count = to_size("synth.confounder_count", *v);
  if (auto v = get("synth.seed")) s.seed = static_cast<std::uint64_t>(to_int("synth.seed", *v));
  if (auto v = get("synth.docs_per_region")) s.docs_per_region = to_size("synth.docs_per_region", *v);
  if (auto v = get("synth.tokens_per_doc")) s.tokens_per_doc = to_size("synth.tokens_per_doc", *v);
  if (auto v = get("synth.regions_per_state")) s.regions_per_state = to_size("synth.regions_per_state", *v);
  if (auto v = get("synth.seeds_per_construct")) s.seeds_per_construct = to_size("synth.seeds_per_construct", *v);
  if (auto v = get("synth.construct_rate")) s.construct_rate = to_double("synth.construct_rate", *v);
  if (auto v = get("synth.confounder_rate")) s.confounder_rate = to_double("synth.confounder_rate", *v);

  if (auto v = get("run.construct")) {
    if (!v->empty()) c.only_construct = *v;
  }
  if (auto v = get("run.threads")) c.threads = static_cast<int>(to_int("run.threads", *v));

  validate(c.build);
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) throw ConfigError("gp.holdout_fraction must lie in [0,1)");
  for (double t : c.grid_tau_syn) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("ablate.tau_syn values must lie in (0,1)");
  }
  for (double t : c.grid_tau_con) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("ablate.tau_con values must lie in (0,1)");
  }
  for (double t : c.grid_theta) {
    if (!(t >= 0.0)) throw ConfigError("ablate.theta values must be >= 0");
  }

  // Echo of every resolved setting, defaults included.
  auto& e = c.effective;
  const auto p = [](const fs::path& x) { return x.string(); };
  std::vector<std::string> seeds;
  for (const auto& x : c.seeds) seeds.push_back(x.string());
  const auto grid = [](const std::vector<double>& g) {
    std::vector<std::string> parts;
    for (double x : g) parts.push_back(format_double(x));
    return join(parts, ",");
  };
  e["paths.embeddings"] = p(c.embeddings);
  e["paths.seeds"] = join(seeds, ",");
  e["paths.corpus"] = p(c.corpus);
  e["paths.counts"] = p(c.counts);
  e["paths.indicators"] = p(c.indicators);
  e["paths.features"] = p(c.features);
  e["paths.county_state"] = p(c.county_state);
  e["paths.communities"] = p(c.communities);
  e["paths.boundaries"] = p(c.boundaries);
  e["paths.output"] = p(c.output);
  e["lexicon.tau_syn"] = format_double(c.build.tau_syn);
  e["lexicon.tau_con"] = format_double(c.build.tau_con);
  e["lexicon.theta"] = format_double(c.build.theta);
  e["lexicon.min_regions"] = std::to_string(c.build.floors.min_regions);
  e["lexicon.min_rel_freq"] = format_double(c.build.floors.min_rel_freq);
  e["lexicon.max_embedding_rank"] =
      c.build.floors.max_embedding_rank ? std::to_string(*c.build.floors.max_embedding_rank) : "";
  e["lexicon.normalization"] = to_string(c.build.normalization);
  e["lexicon.min_docs"] = std::to_string(c.min_docs);
  e["lexicon.skip_unresolvable"] = c.build.expansion.skip_unresolvable ? "true" : "false";
  e["lexicon.top_k"] = std::to_string(c.build.expansion.top_k);
  e["scoring.zscore"] = c.zscore ? "true" : "false";
  e["scoring.diff_raw"] = c.diff_raw ? "true" : "false";
  e["scoring.min_community_counties"] = std::to_string(c.min_community_counties);
  e["validate.primary"] = join(c.primary_indicators, ",");
  std::vector<std::string> dirs;
  for (const auto& [k, v] : c.directions) dirs.push_back(k + ":" + (v > 0 ? "+1" : "-1"));
  e["validate.directions"] = join(dirs, ",");
  e["validate.n_boot"] = std::to_string(c.n_boot);
  e["validate.seed"] = std::to_string(c.boot_seed);
  e["gp.lr"] = format_double(c.gp.lr);
  e["gp.iters"] = std::to_string(c.gp.iters);
  e["gp.jitter"] = format_double(c.gp.jitter);
  e["gp.seed"] = std::to_string(c.gp.seed);
  e["gp.target"] = c.gp_target;
  e["gp.holdout_fraction"] = format_double(c.holdout_fraction);
  e["ablate.tau_syn"] = grid(c.grid_tau_syn);
  e["ablate.tau_con"] = grid(c.grid_tau_con);
  e["ablate.theta"] = grid(c.grid_theta);
  e["synth.n_regions"] = std::to_string(s.n_regions);
  e["synth.n_constructs"] = std::to_string(s.n_constructs);
  e["synth.words_per_construct"] = std::to_string(s.words_per_construct);
  e["synth.vocab_size"] = std::to_string(s.vocab_size);
  e["synth.dim"] = std::to_string(s.dim);
  e["synth.signal_strength"] = format_double(s.signal_strength);
  e["synth.noise_vocab_fraction"] = format_double(s.noise_vocab_fraction);
  e["synth.confounder_count"] = std::to_string(s.confounder_count);
  e["synth.seed"] = std::to_string(s.seed);
  e["synth.docs_per_region"] = std::to_string(s.docs_per_region);
  e["synth.tokens_per_doc"] = std::to_string(s.tokens_per_doc);
  e["synth.regions_per_state"] = std::to_string(s.regions_per_state);
  e["synth.seeds_per_construct"] = std::to_string(s.seeds_per_construct);
  e["synth.construct_rate"] = format_double(s.construct_rate);
  e["synth.confounder_rate"] = format_double(s.confounder_rate);
  e["run.construct"] = c.only_construct.value_or("");
  e["run.threads"] = std::to_string(c.threads);
  return c;
}

}  // namespace kgl::app
