#include "pce/glm.hpp"

#include <cmath>
#include <limits>

namespace pce {

namespace {

constexpr double kProbFloor = 1e-6;
constexpr int kMaxIterations = 50;
constexpr double kDevianceTol = 1e-8;

double clamp_probability(double p) {
  if (p < kProbFloor) return kProbFloor;
  if (p > 1.0 - kProbFloor) return 1.0 - kProbFloor;
  return p;
}

void check_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, Eigen::Index cols) {
  if (qr.rank() < cols) {
    throw Error(ErrorKind::kRankDeficientDesign,
                "design has rank " + std::to_string(qr.rank()) + " but " + std::to_string(cols) +
                    " columns");
  }
}

}  // namespace

Eigen::MatrixXd build_design(const Eigen::MatrixXd& x, const DesignSpec& spec) {
  std::vector<int> cols = spec.covariate_indices;
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(x.cols()));
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = static_cast<int>(j);
  }
  for (int c : cols) {
    if (c < 0 || c >= x.cols()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "covariate index " + std::to_string(c) + " out of range for " +
                      std::to_string(x.cols()) + " columns");
    }
  }
  Eigen::Index offset = spec.include_intercept ? 1 : 0;
  Eigen::MatrixXd design(x.rows(), offset + static_cast<Eigen::Index>(cols.size()));
  if (spec.include_intercept) design.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    design.col(offset + static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  }
  return design;
}

LogisticFit fit_logistic(const Eigen::VectorXi& response, const Eigen::MatrixXd& x,
                         const DesignSpec& spec) {
  Eigen::Index n = response.size();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "no observations to fit");
  if (x.rows() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "response has " + std::to_string(n) + " rows, design has " +
                    std::to_string(x.rows()));
  }
  int ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (response[i] != 0 && response[i] != 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "logistic response must be 0 or 1, got " + std::to_string(response[i]) +
                      " at row " + std::to_string(i + 1));
    }
    ones += response[i];
  }
  if (ones == 0 || ones == n) {
    throw Error(ErrorKind::kDegenerateResponse,
                "response is constant (all " + std::to_string(ones == 0 ? 0 : 1) + ")");
  }

  Eigen::MatrixXd design = build_design(x, spec);
  Eigen::Index p = design.cols();
  if (n < p) {
    throw Error(ErrorKind::kRankDeficientDesign, std::to_string(n) + " observations for " +
                                                     std::to_string(p) + " parameters");
  }
  check_rank(Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(design), p);

  Eigen::VectorXd yd(n);
  for (Eigen::Index i = 0; i < n; ++i) yd[i] = static_cast<double>(response[i]);

  LogisticFit fit;
  fit.spec = spec;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double prev_deviance = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eigen::VectorXd eta = design * beta;
    Eigen::VectorXd mu(n), w(n);
    double deviance = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = clamp_probability(1.0 / (1.0 + std::exp(-eta[i])));
      mu[i] = m;
      w[i] = m * (1.0 - m);
      deviance -= 2.0 * (yd[i] * std::log(m) + (1.0 - yd[i]) * std::log(1.0 - m));
    }
    // Weighted least squares step on the working response.
    Eigen::VectorXd working = eta + (yd - mu).cwiseQuotient(w);
    Eigen::MatrixXd a = design.transpose() * w.asDiagonal() * design;
    Eigen::VectorXd b = design.transpose() * (w.cwiseProduct(working));
    beta = a.ldlt().solve(b);
    fit.iterations = it;
    fit.deviance = deviance;
    if (std::abs(deviance - prev_deviance) < kDevianceTol) {
      fit.converged = true;
      break;
    }
    prev_deviance = deviance;
  }
  fit.coefficients = beta;
  return fit;
}

LinearFit fit_ols(const Eigen::VectorXd& response, const Eigen::MatrixXd& x,
                  const DesignSpec& spec) {
  Eigen::Index n = response.size();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "no observations to fit");
  if (x.rows() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "response has " + std::to_string(n) + " rows, design has " +
                    std::to_string(x.rows()));
  }
  Eigen::MatrixXd design = build_design(x, spec);
  Eigen::Index p = design.cols();
  if (n < p) {
    throw Error(ErrorKind::kRankDeficientDesign, std::to_string(n) + " observations for " +
                                                     std::to_string(p) + " parameters");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  check_rank(qr, p);
  LinearFit fit;
  fit.spec = spec;
  fit.coefficients = qr.solve(response);
  Eigen::VectorXd resid = response - design * fit.coefficients;
  fit.residual_variance = n > p ? resid.squaredNorm() / static_cast<double>(n - p)
                                : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

Eigen::VectorXd predict_probability(const LogisticFit& fit, const Eigen::MatrixXd& x) {
  Eigen::VectorXd eta = build_design(x, fit.spec) * fit.coefficients;
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    out[i] = clamp_probability(1.0 / (1.0 + std::exp(-eta[i])));
  }
  return out;
}

Eigen::VectorXd predict_mean(const LinearFit& fit, const Eigen::MatrixXd& x) {
  return build_design(x, fit.spec) * fit.coefficients;
}

PrincipalScores NuisanceFit::scores() const {
  return strata_from_scores(p1_x, p0_x);
}

namespace {

// Rows of x with z == arm, plus the matching responses.
struct ArmSlice {
  Eigen::MatrixXd x;
  Eigen::VectorXi si;
  Eigen::VectorXd yd;
};

ArmSlice slice_arm(const Dataset& ds, int arm) {
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < ds.n(); ++i) count += (ds.z[i] == arm) ? 1 : 0;
  ArmSlice out;
  out.x.resize(count, ds.k());
  out.si.resize(count);
  out.yd.resize(count);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    if (ds.z[i] != arm) continue;
    out.x.row(r) = ds.x.row(i);
    out.si[r] = ds.s[i];
    out.yd[r] = ds.y[i];
    ++r;
  }
  return out;
}

Eigen::Index design_width(const Eigen::MatrixXd& x, const DesignSpec& spec) {
  Eigen::Index cols = spec.covariate_indices.empty()
                          ? x.cols()
                          : static_cast<Eigen::Index>(spec.covariate_indices.size());
  return cols + (spec.include_intercept ? 1 : 0);
}

}  // namespace

NuisanceFit fit_nuisance(const Dataset& ds, const DesignSpec& tp_spec, const DesignSpec& ps_spec,
                         const DesignSpec& om_spec, const FitOptions& options) {
  ValidationReport report = validate(ds);
  NuisanceFit nf;
  nf.randomized = options.randomized;
  nf.strong_monotonicity = options.strong_monotonicity;

  if (options.strong_monotonicity) {
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      if (ds.z[i] == 0 && ds.s[i] == 1) {
        throw Error(ErrorKind::kInvalidArgument,
                    "strong monotonicity requires s = 0 for every control unit; data row " +
                        std::to_string(i + 1) + " has z = 0, s = 1");
      }
    }
  }

  Eigen::Index n = ds.n();
  if (options.randomized) {
    if (report.n_treated == 0 || report.n_treated == n) {
      throw Error(ErrorKind::kDegenerateResponse, "treatment is constant");
    }
    double share = static_cast<double>(report.n_treated) / static_cast<double>(n);
    nf.pi_x = Eigen::VectorXd::Constant(n, share);
  } else {
    nf.tp = fit_logistic(ds.z, ds.x, tp_spec);
    if (!nf.tp.converged) {
      nf.warnings.push_back("treatment model did not converge in " +
                            std::to_string(nf.tp.iterations) + " iterations");
    }
    nf.pi_x = predict_probability(nf.tp, ds.x);
  }

  ArmSlice treated = slice_arm(ds, 1);
  ArmSlice control = slice_arm(ds, 0);
  Eigen::Index ps_width = design_width(ds.x, ps_spec);
  if (treated.x.rows() < ps_width + 1) {
    throw Error(ErrorKind::kEmptyCell, "arm z=1 has " + std::to_string(treated.x.rows()) +
                                           " units; the intermediate model needs at least " +
                                           std::to_string(ps_width + 1));
  }
  nf.ps1 = fit_logistic(treated.si, treated.x, ps_spec);
  if (!nf.ps1.converged) {
    nf.warnings.push_back("intermediate model for z=1 did not converge in " +
                          std::to_string(nf.ps1.iterations) + " iterations");
  }
  nf.p1_x = predict_probability(nf.ps1, ds.x);

  if (options.strong_monotonicity) {
    nf.p0_x = Eigen::VectorXd::Zero(n);
  } else {
    if (control.x.rows() < ps_width + 1) {
      throw Error(ErrorKind::kEmptyCell, "arm z=0 has " + std::to_string(control.x.rows()) +
                                             " units; the intermediate model needs at least " +
                                             std::to_string(ps_width + 1));
    }
    nf.ps0 = fit_logistic(control.si, control.x, ps_spec);
    if (!nf.ps0.converged) {
      nf.warnings.push_back("intermediate model for z=0 did not converge in " +
                            std::to_string(nf.ps0.iterations) + " iterations");
    }
    nf.p0_x = predict_probability(nf.ps0, ds.x);
  }

  Eigen::Index om_width = design_width(ds.x, om_spec);
  for (int z = 0; z < 2; ++z) {
    for (int s = 0; s < 2; ++s) {
      std::size_t idx = static_cast<std::size_t>(z * 2 + s);
      if (options.strong_monotonicity && z == 0 && s == 1) {
        nf.has_om[idx] = false;
        nf.mu_x[idx] = Eigen::VectorXd::Zero(n);
        continue;
      }
      const ArmSlice& arm = (z == 1) ? treated : control;
      Eigen::Index count = 0;
      for (Eigen::Index i = 0; i < arm.si.size(); ++i) count += (arm.si[i] == s) ? 1 : 0;
      if (count < om_width + 1) {
        throw Error(ErrorKind::kEmptyCell, "cell z=" + std::to_string(z) + ", s=" +
                                               std::to_string(s) + " has " + std::to_string(count) +
                                               " units; the outcome model needs at least " +
                                               std::to_string(om_width + 1));
      }
      Eigen::MatrixXd cx(count, ds.k());
      Eigen::VectorXd cy(count);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < arm.si.size(); ++i) {
        if (arm.si[i] != s) continue;
        cx.row(r) = arm.x.row(i);
        cy[r] = arm.yd[i];
        ++r;
      }
      nf.om[idx] = fit_ols(cy, cx, om_spec);
      nf.has_om[idx] = true;
      nf.mu_x[idx] = predict_mean(nf.om[idx], ds.x);
    }
  }

  PrincipalScores ps = strata_from_scores(nf.p1_x, nf.p0_x);
  for (const auto& w : ps.warnings) nf.warnings.push_back(w);
  if (options.truncate) {
    PrincipalScores truncated = truncate_scores(ps);
    nf.truncated = truncated.warnings.size() > ps.warnings.size();
    for (std::size_t i = ps.warnings.size(); i < truncated.warnings.size(); ++i) {
      nf.warnings.push_back(truncated.warnings[i]);
    }
    nf.p1_x = truncated.p1;
    nf.p0_x = truncated.p0;
  }
  return nf;
}

}  // namespace pce
