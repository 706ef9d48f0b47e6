#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pce/estimators.hpp"

namespace pce {

// One point of the sensitivity analysis. The ratios epsilon_z compare mean
// outcomes across strata within an arm; 1 recovers the identified case.
// When eta_z is set, epsilon_z(x) = exp(-x' eta_z) and the scalar is ignored.
struct SensitivitySpec {
  double eps1 = 1.0;
  double eps0 = 1.0;
  std::optional<Eigen::VectorXd> eta1;
  std::optional<Eigen::VectorXd> eta0;

  Eigen::VectorXd eps1_at(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd eps0_at(const Eigen::MatrixXd& x) const;
  std::string label1() const;
  std::string label0() const;
};

// Per-unit odds corrections carried into the weighting and influence-function
// estimators, plus the epsilon values they were built from.
struct OmegaSet {
  Eigen::VectorXd w1_10;
  Eigen::VectorXd w0_10;
  Eigen::VectorXd w0_00;
  Eigen::VectorXd w1_11;
  Eigen::VectorXd eps1;
  Eigen::VectorXd eps0;
  std::vector<std::string> warnings;
};

// Negative e10(x) values are clamped to 0 inside this computation only, with a
// warning; throws NonPositiveDenominator if a mixing denominator is not > 0.
OmegaSet compute_omega(const PrincipalScores& scores, const SensitivitySpec& spec,
                       const Eigen::MatrixXd& x);

PceEstimate estimate_sens_weighting(const Dataset& ds, const NuisanceFit& nf,
                                    const SensitivitySpec& spec,
                                    const EstimatorOptions& options = {});

PceEstimate estimate_sens_dr(const Dataset& ds, const NuisanceFit& nf,
                             const SensitivitySpec& spec,
                             const EstimatorOptions& options = {});

enum class SensMethod { kWeighting, kDoublyRobust };

struct SweepRow {
  std::string eps1_label;
  std::string eps0_label;
  PceEstimate estimate;
};

// Evaluates every spec against one shared nuisance fit. A spec whose estimate
// degenerates yields a row with NaN estimates and the error text as a warning.
std::vector<SweepRow> sensitivity_sweep(const Dataset& ds, const NuisanceFit& nf,
                                        const std::vector<SensitivitySpec>& grid,
                                        SensMethod method,
                                        const EstimatorOptions& options = {});

// Cross product of constant epsilon values, row-major in eps1.
std::vector<SensitivitySpec> make_grid(const std::vector<double>& eps1_values,
                                       const std::vector<double>& eps0_values);

inline const std::vector<double> kDefaultEpsGrid = {0.5, 0.75, 1.0, 1.5, 2.0};

}  // namespace pce
