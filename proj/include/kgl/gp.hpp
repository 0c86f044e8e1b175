#pragma once

// Gaussian-process regression (ARD squared-exponential kernel) used to krige
// construct scores onto counties without enough text.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgl/scoring.hpp"

namespace kgl {

inline constexpr std::array<const char*, 11> kSocioColumns = {
    "median_income", "pct_bachelors", "unemployment_rate", "hs_grad_rate", "pop_density", "median_age",
    "pct_rural",     "pct_hispanic",  "pct_female",        "pct_married",  "pct_african_american"};

struct FeatureRow {
  std::string region;
  double lat = 0.0;
  double lon = 0.0;
  std::array<double, 11> socio{};

  // lat, lon, then the socio columns.
  std::vector<double> values() const;
};

std::vector<std::string> feature_names();

// CSV `fips,lat,lon,<socio columns>`. Range checks on lat/lon and percentages.
std::vector<FeatureRow> load_features(const std::filesystem::path& path);
void save_features(const std::vector<FeatureRow>& rows, const std::filesystem::path& path);

struct GPConfig {
  double lr = 0.1;
  int iters = 500;
  double jitter = 1e-6;
  std::uint64_t seed = 0;
};

struct GPHyper {
  std::vector<double> length_scales;  // standardized feature space
  double signal_var = 1.0;
  double noise_var = 1e-6;
};

struct GPPrediction {
  std::vector<double> mean;
  std::vector<double> variance;
  std::size_t clamped = 0;  // variances lifted from below -1e-8 to 0
};

class GPModel {
 public:
  // Fixed hyperparameters, no optimization. `hyper.length_scales` must match
  // the number of kept (non-constant) features.
  static GPModel with_hyper(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                            const GPHyper& hyper, double jitter = 1e-6);

  GPPrediction predict(const Eigen::MatrixXd& x) const;

  // Log marginal likelihood at the current hyperparameters.
  double log_marginal_likelihood() const { return lml_; }

  const GPHyper& hyper() const { return hyper_; }
  const std::vector<std::string>& kept_features() const { return kept_names_; }
  const std::vector<std::string>& dropped_features() const { return dropped_names_; }
  const std::vector<double>& lml_trace() const { return trace_; }
  double target_mean() const { return y_mean_; }
  double effective_jitter() const { return jitter_used_; }
  std::size_t n_train() const { return static_cast<std::size_t>(x_.rows()); }
  std::string to_json() const;

  friend GPModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
                        const GPConfig& config);

 private:
  void standardize(const Eigen::MatrixXd& raw, const std::vector<std::string>& names);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& raw) const;
  void refresh();

  std::vector<std::size_t> kept_;
  std::vector<std::string> kept_names_;
  std::vector<std::string> dropped_names_;
  Eigen::VectorXd mu_, sd_;
  Eigen::MatrixXd x_;  // standardized training inputs, kept columns only
  Eigen::VectorXd y_;  // centered targets
  double y_mean_ = 0.0;
  GPHyper hyper_;
  double jitter_ = 1e-6;
  double jitter_used_ = 1e-6;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  std::vector<double> trace_;
};

// Gradient ascent on log hyperparameters with step halving whenever the
// likelihood would decrease. Throws NumericError on factorization failure or
// a non-finite likelihood.
GPModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::vector<std::string> names,
               const GPConfig& config);

Eigen::MatrixXd feature_matrix(const std::vector<FeatureRow>& rows);

struct InterpolatedRow {
  std::string region;
  double score = 0.0;
  double variance = 0.0;
  bool observed = true;
};

struct InterpolationResult {
  std::vector<InterpolatedRow> rows;
  std::vector<std::string> gaps;  // unobserved regions without feature rows
  std::vector<std::string> observed_without_features;
  bool fitted = false;
  GPModel model;
};

// Fits on observed regions that have features and predicts every feature row
// without a score. `targets` maps region -> score.
InterpolationResult interpolate_missing(const std::map<std::string, double>& targets,
                                        const std::vector<FeatureRow>& features, const GPConfig& config,
                                        const std::vector<std::string>& all_regions = {});

// CSV `fips,score,variance,source`.
void save_interpolation(const InterpolationResult& result, const std::filesystem::path& path);

}  // namespace kgl
