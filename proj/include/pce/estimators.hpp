#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pce/data.hpp"
#include "pce/glm.hpp"

namespace pce {

struct EstimatorOptions {
  MarginalMode marginal_mode = MarginalMode::kDoublyRobust;
  bool stabilized = false;  // divide weighted sums by realized weight sums
  double trim = 0.0;        // clamp pi(x) into [trim, 1 - trim] before weighting
};

// One estimator's output. tau entries are NaN for strata the estimator cannot
// address (only tau_11 under strong monotonicity). proportions holds the
// stratum-share denominators actually used.
struct PceEstimate {
  std::string estimator;
  std::array<double, 3> tau{};
  std::array<double, 3> proportions{};
  std::vector<std::string> warnings;
};

// Per-unit AIPW transforms psi_f for the fixed set of f needed downstream.
struct PsiSet {
  Eigen::VectorXd s1;            // psi_{S_1}
  Eigen::VectorXd s0;            // psi_{S_0}
  Eigen::VectorXd one_minus_s1;  // psi_{1 - S_1}
  Eigen::VectorXd one_minus_s0;  // psi_{1 - S_0}
  Eigen::VectorXd y1s1;          // psi_{Y_1 S_1}
  Eigen::VectorXd y0s0;          // psi_{Y_0 S_0}
  Eigen::VectorXd y1_one_minus_s1;
  Eigen::VectorXd y0_one_minus_s0;
};

PsiSet compute_psi(const Dataset& ds, const NuisanceFit& nf, double trim = 0.0);

// Per-unit influence function pieces phi_{z,u}.
struct PhiSet {
  Eigen::VectorXd phi1_10;
  Eigen::VectorXd phi0_10;
  Eigen::VectorXd phi1_00;
  Eigen::VectorXd phi0_00;
  Eigen::VectorXd phi1_11;
  Eigen::VectorXd phi0_11;
};

PhiSet compute_phi(const Dataset& ds, const NuisanceFit& nf, const PsiSet& psi);

PceEstimate estimate_tp_ps(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options = {});
PceEstimate estimate_tp_om(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options = {});
PceEstimate estimate_ps_om(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options = {});
PceEstimate estimate_triply_robust(const Dataset& ds, const NuisanceFit& nf,
                                   const EstimatorOptions& options = {});

inline constexpr std::array<const char*, 5> kEstimatorFamilies = {
    "tp-ps", "tp-ps-stab", "tp-om", "ps-om", "triply-robust"};

struct FamilyResult {
  std::string estimator;
  std::optional<PceEstimate> estimate;
  std::string error;  // empty on success
};

// Runs every family, capturing per-family failures instead of throwing.
std::vector<FamilyResult> estimate_all(const Dataset& ds, const NuisanceFit& nf,
                                       const EstimatorOptions& options = {});

namespace detail {

// Per-unit multipliers on the stratum-mixing weights. Empty vectors mean one.
// The plain estimators use the defaults; the sensitivity module passes its
// omega corrections through here so that both share one arithmetic path.
struct MixWeights {
  Eigen::VectorXd w1_10;
  Eigen::VectorXd w0_10;
  Eigen::VectorXd w0_00;
  Eigen::VectorXd w1_11;
  Eigen::VectorXd eps1;  // only used by the influence-function form
  Eigen::VectorXd eps0;
};

PceEstimate tp_ps_weighted(const Dataset& ds, const NuisanceFit& nf, const MixWeights& mix,
                           const EstimatorOptions& options, const std::string& label);

PhiSet phi_weighted(const Dataset& ds, const NuisanceFit& nf, const PsiSet& psi,
                    const MixWeights& mix);

PceEstimate tr_from_phi(const NuisanceFit& nf, const PsiSet& psi, const PhiSet& phi,
                        const std::string& label);

}  // namespace detail

}  // namespace pce
