#include "pce/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "pce/parallel.hpp"
#include "pce/rng.hpp"

namespace pce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Dataset resample(const Dataset& ds, Rng& rng) {
  Eigen::Index n = ds.n();
  Dataset out;
  out.z.resize(n);
  out.s.resize(n);
  out.y.resize(n);
  out.x.resize(n, ds.k());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    out.z[i] = ds.z[j];
    out.s[i] = ds.s[j];
    out.y[i] = ds.y[j];
    out.x.row(i) = ds.x.row(j);
  }
  return out;
}

// Linear interpolation between order statistics, the usual type-7 rule.
double quantile_type7(const std::vector<double>& sorted, double p) {
  std::size_t m = sorted.size();
  if (m == 0) return kNaN;
  if (m == 1) return sorted[0];
  double h = static_cast<double>(m - 1) * p;
  double lo = std::floor(h);
  std::size_t k = static_cast<std::size_t>(lo);
  if (k + 1 >= m) return sorted[m - 1];
  return sorted[k] + (h - lo) * (sorted[k + 1] - sorted[k]);
}

}  // namespace

BootstrapResult bootstrap(const Dataset& ds, const Pipeline& pipeline,
                          const BootstrapConfig& config) {
  if (config.replicates < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "replicates must be >= 1, got " + std::to_string(config.replicates));
  }
  if (!(config.level > 0.0 && config.level < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "confidence level must lie in (0, 1), got " + format_double(config.level));
  }
  if (!(config.max_failure_rate >= 0.0 && config.max_failure_rate <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "max_failure_rate must lie in [0, 1], got " +
                                                 format_double(config.max_failure_rate));
  }

  std::vector<PceEstimate> point = pipeline(ds);
  std::size_t n_labels = point.size();
  if (n_labels == 0) {
    throw Error(ErrorKind::kInvalidArgument, "pipeline produced no estimates");
  }

  std::size_t reps = static_cast<std::size_t>(config.replicates);
  // draws[label][stratum][replicate], NaN marking a failed draw.
  std::vector<std::array<std::vector<double>, 3>> draws(n_labels);
  for (auto& per_label : draws) {
    for (auto& per_stratum : per_label) per_stratum.assign(reps, kNaN);
  }
  std::vector<std::string> replicate_errors(reps);

  parallel_for(reps, config.threads, [&](std::size_t r) {
    Rng rng(config.seed, static_cast<std::uint64_t>(r) + 1);
    Dataset boot = resample(ds, rng);
    std::vector<PceEstimate> fit;
    try {
      fit = pipeline(boot);
    } catch (const Error& e) {
      replicate_errors[r] = e.what();
      return;
    }
    if (fit.size() != n_labels) {
      replicate_errors[r] = "pipeline produced " + std::to_string(fit.size()) +
                            " estimates, expected " + std::to_string(n_labels);
      return;
    }
    for (std::size_t q = 0; q < n_labels; ++q) {
      for (int u = 0; u < 3; ++u) {
        draws[q][static_cast<std::size_t>(u)][r] = fit[q].tau[static_cast<std::size_t>(u)];
      }
    }
  });

  BootstrapResult result;
  result.replicates = config.replicates;
  result.level = config.level;
  result.method = config.method;

  std::size_t n_replicate_failures = 0;
  std::string first_error;
  for (const auto& err : replicate_errors) {
    if (!err.empty()) {
      if (first_error.empty()) first_error = err;
      ++n_replicate_failures;
    }
  }
  if (n_replicate_failures > 0) {
    result.warnings.push_back(std::to_string(n_replicate_failures) + " of " +
                              std::to_string(reps) +
                              " replicates failed; first error: " + first_error);
  }

  boost::math::normal_distribution<double> gauss(0.0, 1.0);
  double z = boost::math::quantile(gauss, (1.0 + config.level) / 2.0);
  double alpha = 1.0 - config.level;

  for (std::size_t q = 0; q < n_labels; ++q) {
    BootstrapEstimate be;
    be.estimator = point[q].estimator;
    for (int u = 0; u < 3; ++u) {
      auto su = static_cast<std::size_t>(u);
      IntervalEstimate ie;
      ie.point = point[q].tau[su];
      std::vector<double> finite;
      finite.reserve(reps);
      for (double v : draws[q][su]) {
        if (std::isfinite(v)) finite.push_back(v);
      }
      ie.n_failed = static_cast<int>(reps - finite.size());
      if (!std::isfinite(ie.point)) {
        ie.lower = kNaN;
        ie.upper = kNaN;
        ie.se = kNaN;
        be.tau[su] = ie;
        continue;
      }
      double rate = static_cast<double>(ie.n_failed) / static_cast<double>(reps);
      if (rate > config.max_failure_rate) {
        throw Error(ErrorKind::kTooManyFailures,
                    be.estimator + ", stratum " + kStratumLabel[su] + ": " +
                        std::to_string(ie.n_failed) + " of " + std::to_string(reps) +
                        " replicates failed" +
                        (first_error.empty() ? "" : "; first error: " + first_error));
      }
      double mean = 0.0;
      for (double v : finite) mean += v;
      mean /= static_cast<double>(finite.size());
      double ss = 0.0;
      for (double v : finite) ss += (v - mean) * (v - mean);
      ie.se = finite.size() > 1
                  ? std::sqrt(ss / static_cast<double>(finite.size() - 1))
                  : kNaN;
      if (config.method == CiMethod::kNormal) {
        ie.lower = ie.point - z * ie.se;
        ie.upper = ie.point + z * ie.se;
      } else {
        std::sort(finite.begin(), finite.end());
        ie.lower = quantile_type7(finite, alpha / 2.0);
        ie.upper = quantile_type7(finite, 1.0 - alpha / 2.0);
      }
      be.tau[su] = ie;
    }
    result.estimates.push_back(std::move(be));
  }
  return result;
}

}  // namespace pce
