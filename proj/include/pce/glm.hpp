#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "pce/data.hpp"

namespace pce {

// Which covariate columns enter a model. Empty covariate_indices means all of
// them. Indices are zero-based positions in Dataset::x.
struct DesignSpec {
  std::vector<int> covariate_indices;
  bool include_intercept = true;
};

struct LogisticFit {
  DesignSpec spec;
  Eigen::VectorXd coefficients;  // intercept first when included
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
};

struct LinearFit {
  DesignSpec spec;
  Eigen::VectorXd coefficients;
  double residual_variance = 0.0;
};

Eigen::MatrixXd build_design(const Eigen::MatrixXd& x, const DesignSpec& spec);

// Logistic regression by iteratively reweighted least squares. Stops when the
// deviance changes by less than 1e-8 or after 50 iterations; a capped fit is
// returned with converged = false rather than thrown.
LogisticFit fit_logistic(const Eigen::VectorXi& response, const Eigen::MatrixXd& x,
                         const DesignSpec& spec = {});

LinearFit fit_ols(const Eigen::VectorXd& response, const Eigen::MatrixXd& x,
                  const DesignSpec& spec = {});

// Fitted probabilities, clamped to [1e-6, 1 - 1e-6] so downstream weights
// stay finite.
Eigen::VectorXd predict_probability(const LogisticFit& fit, const Eigen::MatrixXd& x);
Eigen::VectorXd predict_mean(const LinearFit& fit, const Eigen::MatrixXd& x);

struct FitOptions {
  bool randomized = false;            // treat pi(x) as the constant share of treated units
  bool strong_monotonicity = false;   // controls never respond: p0(x) = 0, no (z=0, s=1) model
  bool truncate = false;              // clamp e10 at 0 and renormalize the score triples
};

// Everything the estimators need, evaluated per unit over the full sample.
// Outcome models are indexed by z * 2 + s.
struct NuisanceFit {
  LogisticFit tp;
  LogisticFit ps1;
  LogisticFit ps0;
  std::array<LinearFit, 4> om{};
  std::array<bool, 4> has_om{};
  Eigen::VectorXd pi_x;
  Eigen::VectorXd p1_x;
  Eigen::VectorXd p0_x;
  std::array<Eigen::VectorXd, 4> mu_x{};
  bool randomized = false;
  bool strong_monotonicity = false;
  bool truncated = false;
  std::vector<std::string> warnings;

  PrincipalScores scores() const;
};

NuisanceFit fit_nuisance(const Dataset& ds, const DesignSpec& tp_spec, const DesignSpec& ps_spec,
                         const DesignSpec& om_spec, const FitOptions& options = {});

}  // namespace pce
