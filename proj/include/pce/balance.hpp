#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pce/glm.hpp"

namespace pce {

// One balance function h(X). `squared` selects the elementwise square.
struct HTerm {
  Eigen::Index index = 0;
  bool squared = false;
  std::string label;
};

struct BalanceOptions {
  // Empty means every covariate plus its square, in column order.
  std::vector<HTerm> terms;
  double threshold = 0.1;
  double trim = 0.0;
};

// Self-normalized mean of each balance function under one weighting scheme,
// with its standardized difference from the reference scheme of the set.
struct WeightingBalance {
  std::string weighting;
  bool is_reference = false;
  std::vector<double> means;
  std::vector<double> stddiff_vs_reference;
};

struct StratumBalance {
  std::string stratum;
  std::vector<WeightingBalance> weightings;
  // Largest standardized gap over all weighting pairs, per balance function.
  std::vector<double> max_pairwise_stddiff;
  bool flagged = false;
};

struct BalanceReport {
  std::vector<std::string> h_labels;
  std::vector<StratumBalance> strata;
  bool any_flagged = false;
  std::vector<std::string> warnings;
};

// Compares covariate means across the weighting schemes that all target the
// same stratum. Throws DegenerateStratum when a scheme's weights sum to <= 0.
BalanceReport balance_check(const Dataset& ds, const NuisanceFit& nf,
                            const BalanceOptions& options = {});

}  // namespace pce
