#include "pce/sensitivity.hpp"

#include <cmath>
#include <limits>

namespace pce {

namespace {

Eigen::VectorXd eps_at(double constant, const std::optional<Eigen::VectorXd>& eta,
                       const Eigen::MatrixXd& x, const char* which) {
  if (!eta) {
    if (!(constant > 0.0) || !std::isfinite(constant)) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(which) + " must be a positive finite number, got " +
                      format_double(constant));
    }
    return Eigen::VectorXd::Constant(x.rows(), constant);
  }
  if (eta->size() != x.cols()) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(which) + " coefficient vector has length " +
                    std::to_string(eta->size()) + ", expected " + std::to_string(x.cols()));
  }
  return (-(x * *eta)).array().exp();
}

std::string eps_label(double constant, const std::optional<Eigen::VectorXd>& eta) {
  if (!eta) return format_double(constant);
  std::string out = "exp(-[";
  for (Eigen::Index j = 0; j < eta->size(); ++j) {
    if (j > 0) out += ",";
    out += format_double((*eta)[j]);
  }
  out += "]'x)";
  return out;
}

}  // namespace

Eigen::VectorXd SensitivitySpec::eps1_at(const Eigen::MatrixXd& x) const {
  return eps_at(eps1, eta1, x, "eps1");
}

Eigen::VectorXd SensitivitySpec::eps0_at(const Eigen::MatrixXd& x) const {
  return eps_at(eps0, eta0, x, "eps0");
}

std::string SensitivitySpec::label1() const { return eps_label(eps1, eta1); }

std::string SensitivitySpec::label0() const { return eps_label(eps0, eta0); }

OmegaSet compute_omega(const PrincipalScores& scores, const SensitivitySpec& spec,
                       const Eigen::MatrixXd& x) {
  Eigen::Index n = scores.p1.size();
  if (x.rows() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "scores cover " + std::to_string(n) + " units, covariates have " +
                    std::to_string(x.rows()) + " rows");
  }
  OmegaSet out;
  out.eps1 = spec.eps1_at(x);
  out.eps0 = spec.eps0_at(x);
  out.w1_10.resize(n);
  out.w0_10.resize(n);
  out.w0_00.resize(n);
  out.w1_11.resize(n);
  Eigen::Index clamped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double e10 = scores.e10[i];
    if (e10 < 0.0) {
      e10 = 0.0;
      ++clamped;
    }
    double e00 = scores.e00[i];
    double e11 = scores.e11[i];
    double f1 = out.eps1[i];
    double f0 = out.eps0[i];
    double d1 = f1 * e10 + e11;
    double d0 = f0 * e10 + e00;
    if (!(d1 > 0.0)) {
      throw Error(ErrorKind::kNonPositiveDenominator,
                  "unit " + std::to_string(i + 1) + ": eps1*e10 + e11 = " + format_double(d1));
    }
    if (!(d0 > 0.0)) {
      throw Error(ErrorKind::kNonPositiveDenominator,
                  "unit " + std::to_string(i + 1) + ": eps0*e10 + e00 = " + format_double(d0));
    }
    out.w1_10[i] = (f1 * e10 + f1 * e11) / d1;
    out.w0_10[i] = (f0 * e10 + f0 * e00) / d0;
    out.w0_00[i] = (e10 + e00) / d0;
    out.w1_11[i] = (e10 + e11) / d1;
  }
  if (clamped > 0) {
    out.warnings.push_back("e10 clamped to 0 at " + std::to_string(clamped) +
                           " units inside the sensitivity correction");
  }
  return out;
}

PceEstimate estimate_sens_weighting(const Dataset& ds, const NuisanceFit& nf,
                                    const SensitivitySpec& spec,
                                    const EstimatorOptions& options) {
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  OmegaSet omega = compute_omega(scores, spec, ds.x);
  detail::MixWeights mix;
  mix.w1_10 = omega.w1_10;
  mix.w0_10 = omega.w0_10;
  mix.w0_00 = omega.w0_00;
  mix.w1_11 = omega.w1_11;
  mix.eps1 = omega.eps1;
  mix.eps0 = omega.eps0;
  PceEstimate est = detail::tp_ps_weighted(ds, nf, mix, options, "sens-weighting");
  for (const auto& w : omega.warnings) est.warnings.push_back(w);
  return est;
}

PceEstimate estimate_sens_dr(const Dataset& ds, const NuisanceFit& nf,
                             const SensitivitySpec& spec, const EstimatorOptions& options) {
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  OmegaSet omega = compute_omega(scores, spec, ds.x);
  detail::MixWeights mix;
  mix.w1_10 = omega.w1_10;
  mix.w0_10 = omega.w0_10;
  mix.w0_00 = omega.w0_00;
  mix.w1_11 = omega.w1_11;
  mix.eps1 = omega.eps1;
  mix.eps0 = omega.eps0;
  PsiSet psi = compute_psi(ds, nf, options.trim);
  PhiSet phi = detail::phi_weighted(ds, nf, psi, mix);
  PceEstimate est = detail::tr_from_phi(nf, psi, phi, "sens-dr");
  for (const auto& w : omega.warnings) est.warnings.push_back(w);
  return est;
}

std::vector<SweepRow> sensitivity_sweep(const Dataset& ds, const NuisanceFit& nf,
                                        const std::vector<SensitivitySpec>& grid,
                                        SensMethod method, const EstimatorOptions& options) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& spec : grid) {
    SweepRow row;
    row.eps1_label = spec.label1();
    row.eps0_label = spec.label0();
    try {
      row.estimate = method == SensMethod::kWeighting
                         ? estimate_sens_weighting(ds, nf, spec, options)
                         : estimate_sens_dr(ds, nf, spec, options);
    } catch (const Error& e) {
      row.estimate.estimator =
          method == SensMethod::kWeighting ? "sens-weighting" : "sens-dr";
      row.estimate.tau = {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
      row.estimate.proportions = row.estimate.tau;
      row.estimate.warnings.push_back(e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SensitivitySpec> make_grid(const std::vector<double>& eps1_values,
                                       const std::vector<double>& eps0_values) {
  std::vector<SensitivitySpec> grid;
  grid.reserve(eps1_values.size() * eps0_values.size());
  for (double f1 : eps1_values) {
    for (double f0 : eps0_values) {
      SensitivitySpec spec;
      spec.eps1 = f1;
      spec.eps0 = f0;
      grid.push_back(spec);
    }
  }
  return grid;
}

}  // namespace pce
