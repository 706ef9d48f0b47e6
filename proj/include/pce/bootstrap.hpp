#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pce/estimators.hpp"

namespace pce {

enum class CiMethod { kPercentile, kNormal };

struct BootstrapConfig {
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  CiMethod method = CiMethod::kPercentile;
  int threads = 1;
  // A point-identified quantity whose replicate failure rate exceeds this
  // fraction aborts with TooManyFailures instead of a misleading interval.
  double max_failure_rate = 0.2;
};

struct IntervalEstimate {
  double point = 0;
  double lower = 0;
  double upper = 0;
  double se = 0;
  int n_failed = 0;
};

struct BootstrapEstimate {
  std::string estimator;
  std::array<IntervalEstimate, 3> tau;
};

struct BootstrapResult {
  std::vector<BootstrapEstimate> estimates;
  int replicates = 0;
  double level = 0;
  CiMethod method = CiMethod::kPercentile;
  std::vector<std::string> warnings;
};

// Everything that should be re-run per resample, nuisance fitting included.
// Estimates must come back in a fixed order with fixed labels.
using Pipeline = std::function<std::vector<PceEstimate>(const Dataset&)>;

// Nonparametric bootstrap over rows. Replicate r draws indices from a stream
// keyed by (seed, r+1), so results are reproducible and thread-count invariant.
BootstrapResult bootstrap(const Dataset& ds, const Pipeline& pipeline,
                          const BootstrapConfig& config);

}  // namespace pce
