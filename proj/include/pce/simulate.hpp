#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pce/estimators.hpp"
#include "pce/rng.hpp"

namespace pce {

// Synthetic-data design with independently switchable misspecification of the
// three working models. A "false" flag makes the corresponding fitted model
// wrong while the data-generating truth stays fixed.
struct DgpSpec {
  bool tp_correct = true;
  bool ps_correct = true;
  bool om_correct = true;
  Eigen::Index n = 500;
  int reps = 1000;
  std::uint64_t seed = 0;
};

inline constexpr Eigen::Index kDgpCovariates = 5;

// True nuisance functions at one covariate vector, exposed so tests can build
// oracle fits and the truth integrals can reuse the exact same arithmetic.
double dgp_pi(const DgpSpec& dgp, const Eigen::RowVectorXd& x);
double dgp_pz(const DgpSpec& dgp, int z, const Eigen::RowVectorXd& x);
double dgp_mu(const DgpSpec& dgp, int z, int s, const Eigen::RowVectorXd& x);

Eigen::MatrixXd draw_covariates(Eigen::Index n, Rng& rng);

// Replicate r uses stream r+1 of the DgpSpec seed; stream 0 is reserved for
// truth integration so no replicate shares draws with the oracle.
Dataset generate(const DgpSpec& dgp, int replicate);

struct TruthResult {
  std::array<double, 3> tau{};
  std::array<double, 3> se{};
};

// Monte Carlo integral of the principal-score/outcome-mean identification
// formula under the true models, with delta-method standard errors.
TruthResult true_pce(const DgpSpec& dgp, std::int64_t draws, std::uint64_t seed);

// The three identification formulas evaluated with true nuisance functions on
// one simulated sample: [form][stratum] with matching standard errors.
struct IdentificationCheck {
  std::array<std::array<double, 3>, 3> tau{};
  std::array<std::array<double, 3>, 3> se{};
};

IdentificationCheck identification_forms(const DgpSpec& dgp, Eigen::Index draws,
                                         std::uint64_t seed);

// Design where outcome means differ across strata within an arm by a constant
// factor, so the sensitivity-corrected estimators have a known target.
struct TiltedDgpSpec {
  bool tp_correct = true;
  double eps1 = 1.0;
  double eps0 = 1.0;
  Eigen::Index n = 500;
  std::uint64_t seed = 0;
};

Dataset generate_tilted(const TiltedDgpSpec& dgp, int replicate);
TruthResult true_pce_tilted(const TiltedDgpSpec& dgp, std::int64_t draws,
                            std::uint64_t seed);

// Design with no always-takers: p0(x) = 0 identically.
struct OneSidedDgpSpec {
  Eigen::Index n = 500;
  std::uint64_t seed = 0;
};

Dataset generate_one_sided(const OneSidedDgpSpec& dgp, int replicate);
double one_sided_p1(const Eigen::RowVectorXd& x);
TruthResult true_pce_one_sided(const OneSidedDgpSpec& dgp, std::int64_t draws,
                               std::uint64_t seed);

inline const std::vector<std::string> kStudyEstimators = {
    "tp-ps", "tp-ps-stab", "dl-approx-w", "tp-om", "ps-om", "dl-approx-r", "triply-robust"};

std::string scenario_label(const DgpSpec& dgp);

// Fits every working model by maximum likelihood / least squares on the
// replicate and runs the full estimator battery. The intentionally wrong
// intermediate model uses only the first two covariates.
std::array<std::array<double, 3>, 7> study_estimates(const Dataset& ds, const DgpSpec& dgp);

struct ScenarioResult {
  DgpSpec dgp;
  std::string label;
  TruthResult truth;
  // estimates[rep][estimator][stratum]; failed fits are NaN.
  std::vector<std::array<std::array<double, 3>, 7>> estimates;
  int n_failed = 0;
};

struct StudyConfig {
  std::vector<DgpSpec> scenarios;
  std::int64_t oracle_draws = 1000000;
  int threads = 1;
};

std::vector<ScenarioResult> run_study(const StudyConfig& config);

// All eight misspecification patterns with shared size, replicate count, seed.
std::vector<DgpSpec> all_scenarios(Eigen::Index n, int reps, std::uint64_t seed);

// Long-format rows, one per scenario x estimator x stratum x replicate:
// scenario,estimator,stratum,rep,estimate,truth
std::string export_violin_data(const std::vector<ScenarioResult>& results);

}  // namespace pce
