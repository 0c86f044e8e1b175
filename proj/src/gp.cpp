#include "kgl/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include "json.hpp"
#include <omp.h>
#include <set>

#include "kgl/csv.hpp"
#include "kgl/error.hpp"
#include "kgl/rng.hpp"
#include "kgl/util.hpp"

namespace kgl {

std::vector<double> FeatureRow::values() const {
  std::vector<double> v{lat, lon};
  v.insert(v.end(), socio.begin(), socio.end());
  return v;
}

std::vector<std::string> feature_names() {
  std::vector<std::string> n{"lat", "lon"};
  for (const char* c : kSocioColumns) n.emplace_back(c);
  return n;
}

namespace {

bool is_percentage(std::string_view name) {
  return name.starts_with("pct_") || name == "unemployment_rate" || name == "hs_grad_rate";
}

}  // namespace

std::vector<FeatureRow> load_features(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const auto src = path.string();
  std::vector<std::string> expected{"fips"};
  for (const auto& n : feature_names()) expected.push_back(n);
  if (t.header != expected) throw InputError(src + ": header must be '" + join(expected, ",") + "'");
  const auto names = feature_names();
  std::vector<FeatureRow> out;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& row = t.rows[k];
    const auto at = src + ":" + std::to_string(t.lines[k]);
    FeatureRow f;
    f.region = std::string(trim(row[0]));
    if (!seen.insert(f.region).second) throw InputError(at + ": duplicate feature row for " + f.region);
    std::vector<double> vals;
    for (std::size_t j = 1; j < row.size(); ++j) {
      const auto v = parse_double(row[j]);
      if (!v || !std::isfinite(*v)) throw InputError(at + ": missing or bad value for " + names[j - 1]);
      if (is_percentage(names[j - 1]) && (*v < 0.0 || *v > 100.0)) {
        throw InputError(at + ": " + names[j - 1] + " outside [0,100]");
      }
      vals.push_back(*v);
    }
    f.lat = vals[0];
    f.lon = vals[1];
    if (f.lat < -90.0 || f.lat > 90.0) throw InputError(at + ": latitude outside [-90,90]");
    if (f.lon < -180.0 || f.lon > 180.0) throw InputError(at + ": longitude outside [-180,180]");
    std::copy(vals.begin() + 2, vals.end(), f.socio.begin());
    out.push_back(std::move(f));
  }
  return out;
}

void save_features(const std::vector<FeatureRow>& rows, const std::filesystem::path& path) {
  std::vector<std::string> header{"fips"};
  for (const auto& n : feature_names()) header.push_back(n);
  CsvWriter w(header);
  for (const auto& r : rows) {
    std::vector<std::string> fields{r.region};
    for (double v : r.values()) fields.push_back(format_double(v));
    w.row(fields);
  }
  w.save(path);
}

Eigen::MatrixXd feature_matrix(const std::vector<FeatureRow>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 13);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = rows[i].values();
    for (std::size_t j = 0; j < v.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return x;
}

namespace {

constexpr double kJitterCeiling = 1e-2;

// Kernel between standardized rows without the noise term.
Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const GPHyper& h) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  const auto d = static_cast<Eigen::Index>(h.length_scales.size());
  Eigen::VectorXd inv(d);
  for (Eigen::Index j = 0; j < d; ++j) inv(j) = 1.0 / h.length_scales[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double z = (a(i, c) - b(j, c)) * inv(c);
        s += z * z;
      }
      k(i, j) = h.signal_var * std::exp(-0.5 * s);
    }
  }
  return k;
}

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd kf;  // noise-free kernel
  double lml = 0.0;
  double extra = 0.0;  // jitter added beyond the noise variance
};

// Factorizes K + noise I, escalating extra diagonal jitter on failure.
bool factorize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GPHyper& h, double jitter,
               Factorization& out) {
  out.kf = se_kernel(x, x, h);
  const auto n = x.rows();
  double extra = 0.0;
  for (;;) {
    Eigen::MatrixXd ky = out.kf;
    ky.diagonal().array() += h.noise_var + extra;
    out.chol.compute(ky);
    if (out.chol.info() == Eigen::Success && out.chol.matrixLLT().diagonal().allFinite() &&
        (out.chol.matrixLLT().diagonal().array() > 0.0).all()) {
      break;
    }
    extra = extra == 0.0 ? 2.0 * jitter : 2.0 * extra;
    if (extra > kJitterCeiling) return false;
  }
  out.extra = extra;
  out.alpha = out.chol.solve(y);
  const double logdet = 2.0 * out.chol.matrixLLT().diagonal().array().log().sum();
  const double nd = static_cast<double>(n);
  out.lml = -0.5 * y.dot(out.alpha) - 0.5 * logdet - 0.5 * nd * std::log(2.0 * std::numbers::pi);
  return std::isfinite(out.lml);
}

// Log-parameter vector: [log l_1..l_D, log signal_var, log(noise_var - jitter)].
Eigen::VectorXd pack(const GPHyper& h, double jitter) {
  const auto d = static_cast<Eigen::Index>(h.length_scales.size());
  Eigen::VectorXd p(d + 2);
  for (Eigen::Index j = 0; j < d; ++j) p(j) = std::log(h.length_scales[static_cast<std::size_t>(j)]);
  p(d) = std::log(h.signal_var);
  p(d + 1) = std::log(std::max(h.noise_var - jitter, 1e-300));
  return p;
}

GPHyper unpack(const Eigen::VectorXd& p, double jitter) {
  GPHyper h;
  const auto d = p.size() - 2;
  for (Eigen::Index j = 0; j < d; ++j) h.length_scales.push_back(std::exp(p(j)));
  h.signal_var = std::exp(p(d));
  h.noise_var = jitter + std::exp(p(d + 1));
  return h;
}

// Gradient of the log marginal likelihood w.r.t. the packed parameters.
Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const GPHyper& h, double jitter, const Factorization& f) {
  const auto n = x.rows();
  const auto d = static_cast<Eigen::Index>(h.length_scales.size());
  const Eigen::MatrixXd kinv = f.chol.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd w = f.alpha * f.alpha.transpose() - kinv;
  const Eigen::MatrixXd wk = w.cwiseProduct(f.kf);
  Eigen::VectorXd g(d + 2);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double l2 = h.length_scales[static_cast<std::size_t>(c)] * h.length_scales[static_cast<std::size_t>(c)];
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double z = x(i, c) - x(j, c);
        s += wk(i, j) * z * z;
      }
    }
    g(c) = 0.5 * s / l2;
  }
  g(d) = 0.5 * wk.sum();
  g(d + 1) = 0.5 * (h.noise_var - jitter) * w.trace();
  return g;
}

}  // namespace

void GPModel::standardize(const Eigen::MatrixXd& raw, const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(raw.cols()) != names.size()) throw InputError("GP: feature name count mismatch");
  kept_.clear();
  kept_names_.clear();
  dropped_names_.clear();
  std::vector<double> mu, sd;
  const double n = static_cast<double>(raw.rows());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double m = raw.col(c).mean();
    const double s = std::sqrt((raw.col(c).array() - m).square().sum() / n);
    if (!(s > 1e-12 * std::max(1.0, std::abs(m)))) {
      dropped_names_.push_back(names[static_cast<std::size_t>(c)]);
      continue;
    }
    kept_.push_back(static_cast<std::size_t>(c));
    kept_names_.push_back(names[static_cast<std::size_t>(c)]);
    mu.push_back(m);
    sd.push_back(s);
  }
  mu_ = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  sd_ = Eigen::Map<Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  x_ = transform(raw);
}

Eigen::MatrixXd GPModel::transform(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd out(raw.rows(), static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t k = 0; k < kept_.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    out.col(c) = (raw.col(static_cast<Eigen::Index>(kept_[k])).array() - mu_(c)) / sd_(c);
  }
  return out;
}

void GPModel::refresh() {
  Factorization f;
  if (!factorize(x_, y_, hyper_, jitter_, f)) {
    throw NumericError("GP: kernel factorization failed even with jitter " + format_double(kJitterCeiling));
  }
  chol_ = std::move(f.chol);
  alpha_ = std::move(f.alpha);
  lml_ = f.lml;
  jitter_used_ = f.extra;
}

GPModel GPModel::with_hyper(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                            const GPHyper& hyper, double jitter) {
  if (x.rows() < 1 || x.rows() != y.size()) throw InputError("GP: need at least one training row with a target");
  GPModel m;
  m.jitter_ = jitter;
  m.standardize(x, names);
  m.y_mean_ = y.mean();
  m.y_ = y.array() - m.y_mean_;
  m.hyper_ = hyper;
  if (hyper.length_scales.size() == static_cast<std::size_t>(x.cols()) && m.kept_.size() != hyper.length_scales.size()) {
    m.hyper_.length_scales.clear();
    for (auto c : m.kept_) m.hyper_.length_scales.push_back(hyper.length_scales[c]);
  }
  if (m.hyper_.length_scales.size() != m.kept_.size()) throw InputError("GP: length-scale count mismatch");
  m.hyper_.noise_var = std::max(m.hyper_.noise_var, jitter);
  m.refresh();
  return m;
}

GPModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
               const GPConfig& config) {
  if (x.rows() < 2 || x.rows() != y.size()) throw InputError("GP: need at least two training rows");
  if (!(config.lr > 0.0) || config.iters < 0 || !(config.jitter > 0.0)) throw ConfigError("GP: invalid optimizer settings");
  GPModel m;
  m.jitter_ = config.jitter;
  m.standardize(x, names);
  m.y_mean_ = y.mean();
  m.y_ = y.array() - m.y_mean_;
  const double var = m.y_.squaredNorm() / static_cast<double>(y.size() - 1);
  if (!(var > 0.0)) throw NumericError("GP: target variance is zero");

  Rng rng(config.seed, 0x6770);
  const auto perturb = [&] { return 1.0 + rng.uniform(-0.1, 0.1); };
  GPHyper init;
  for (std::size_t k = 0; k < m.kept_.size(); ++k) init.length_scales.push_back(perturb());
  init.signal_var = var * perturb();
  init.noise_var = config.jitter + 0.1 * var * perturb();

  Eigen::VectorXd p = pack(init, config.jitter);
  Factorization cur;
  if (!factorize(m.x_, m.y_, init, config.jitter, cur)) {
    throw NumericError("GP: likelihood not finite at initialization (iteration 0)");
  }
  m.trace_.push_back(cur.lml);
  // A step that would lower the likelihood is halved until it does not.
  for (int it = 1; it <= config.iters; ++it) {
    const GPHyper h = unpack(p, config.jitter);
    const Eigen::VectorXd dir = gradient(m.x_, h, config.jitter, cur);
    if (!dir.allFinite()) throw NumericError("GP: non-finite gradient at iteration " + std::to_string(it));
    double step = config.lr;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      const Eigen::VectorXd q = p + step * dir;
      Factorization next;
      if (factorize(m.x_, m.y_, unpack(q, config.jitter), config.jitter, next) && next.lml >= cur.lml) {
        p = q;
        cur = std::move(next);
        moved = true;
        break;
      }
    }
    if (!std::isfinite(cur.lml)) throw NumericError("GP: non-finite likelihood at iteration " + std::to_string(it));
    m.trace_.push_back(cur.lml);
    if (!moved) break;
  }
  m.hyper_ = unpack(p, config.jitter);
  m.refresh();
  return m;
}

GPPrediction GPModel::predict(const Eigen::MatrixXd& raw) const {
  if (raw.cols() < 1 || static_cast<std::size_t>(raw.cols()) < (kept_.empty() ? 0 : kept_.back() + 1)) {
    throw InputError("GP: prediction rows have too few feature columns");
  }
  const Eigen::MatrixXd xs = transform(raw);
  const auto n = xs.rows();
  GPPrediction out;
  out.mean.resize(static_cast<std::size_t>(n));
  out.variance.resize(static_cast<std::size_t>(n));
  constexpr Eigen::Index block = 256;
  const Eigen::Index blocks = (n + block - 1) / block;
  std::size_t clamped = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : clamped)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * block;
    const Eigen::Index len = std::min(block, n - lo);
    const Eigen::MatrixXd ks = se_kernel(xs.middleRows(lo, len), x_, hyper_);
    const Eigen::VectorXd mean = ks * alpha_;
    const Eigen::MatrixXd v = chol_.matrixL().solve(ks.transpose());
    for (Eigen::Index i = 0; i < len; ++i) {
      double var = hyper_.signal_var - v.col(i).squaredNorm();
      if (var < 0.0) {
        if (var < -1e-8) ++clamped;
        var = 0.0;
      }
      out.mean[static_cast<std::size_t>(lo + i)] = mean(i) + y_mean_;
      out.variance[static_cast<std::size_t>(lo + i)] = var;
    }
  }
  out.clamped = clamped;
  return out;
}

std::string GPModel::to_json() const {
  nlohmann::ordered_json j;
  j["kernel"] = "ard_squared_exponential";
  j["standardized_features"] = kept_names_;
  j["dropped_features"] = dropped_names_;
  nlohmann::ordered_json ls = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kept_names_.size(); ++k) ls[kept_names_[k]] = hyper_.length_scales[k];
  j["length_scales"] = ls;
  j["signal_variance"] = hyper_.signal_var;
  j["noise_variance"] = hyper_.noise_var;
  j["extra_jitter"] = jitter_used_;
  j["target_mean"] = y_mean_;
  j["n_train"] = n_train();
  j["log_marginal_likelihood"] = lml_;
  j["likelihood_trace"] = trace_;
  return j.dump(2) + "\n";
}

InterpolationResult interpolate_missing(const std::map<std::string, double>& targets,
                                        const std::vector<FeatureRow>& features, const GPConfig& config,
                                        const std::vector<std::string>& all_regions) {
  std::map<std::string, const FeatureRow*> by_region;
  for (const auto& f : features) {
    if (!by_region.emplace(f.region, &f).second) throw InputError("duplicate feature row for " + f.region);
  }
  std::set<std::string> universe(all_regions.begin(), all_regions.end());
  for (const auto& [r, v] : targets) universe.insert(r);
  for (const auto& [r, f] : by_region) universe.insert(r);

  InterpolationResult out;
  std::vector<FeatureRow> train, query;
  std::vector<double> y;
  for (const auto& region : universe) {
    const bool observed = targets.count(region) > 0;
    const bool has_features = by_region.count(region) > 0;
    if (observed && has_features) {
      train.push_back(*by_region.at(region));
      y.push_back(targets.at(region));
    } else if (observed) {
      out.observed_without_features.push_back(region);
    } else if (has_features) {
      query.push_back(*by_region.at(region));
    } else {
      out.gaps.push_back(region);
    }
  }

  std::map<std::string, InterpolatedRow> rows;
  for (const auto& [region, v] : targets) rows[region] = {region, v, 0.0, true};
  if (!query.empty()) {
    if (train.size() < 2) throw InputError("interpolation needs at least two observed regions with features");
    Eigen::VectorXd ty = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    out.model = fit_gp(feature_matrix(train), ty, feature_names(), config);
    out.fitted = true;
    const auto pred = out.model.predict(feature_matrix(query));
    for (std::size_t i = 0; i < query.size(); ++i) {
      rows[query[i].region] = {query[i].region, pred.mean[i], pred.variance[i], false};
    }
  }
  for (auto& [region, row] : rows) out.rows.push_back(std::move(row));
  return out;
}

void save_interpolation(const InterpolationResult& result, const std::filesystem::path& path) {
  CsvWriter w({"fips", "score", "variance", "source"});
  for (const auto& r : result.rows) {
    w.row({r.region, format_double(r.score), format_double(r.variance), r.observed ? "observed" : "interpolated"});
  }
  w.save(path);
}

}  // namespace kgl
