#include "pce/estimators.hpp"

#include <cmath>
#include <limits>

namespace pce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// pi values after optional trimming, with the overlap precondition enforced.
Eigen::VectorXd effective_pi(const Eigen::VectorXd& pi_x, double trim) {
  Eigen::VectorXd out = pi_x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (trim > 0.0) {
      if (out[i] < trim) out[i] = trim;
      if (out[i] > 1.0 - trim) out[i] = 1.0 - trim;
    }
    if (!(out[i] > 0.0 && out[i] < 1.0)) {
      throw Error(ErrorKind::kPositivityViolation,
                  "unit " + std::to_string(i + 1) + ": pi(x) = " + format_double(out[i]));
    }
  }
  return out;
}

void check_sizes(const Dataset& ds, const NuisanceFit& nf) {
  Eigen::Index n = ds.n();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "dataset has no rows");
  if (nf.pi_x.size() != n || nf.p1_x.size() != n || nf.p0_x.size() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "nuisance fit covers " + std::to_string(nf.pi_x.size()) + " units, dataset has " +
                    std::to_string(n));
  }
  for (const auto& mu : nf.mu_x) {
    if (mu.size() != 0 && mu.size() != n) {
      throw Error(ErrorKind::kInconsistentCovariateDim,
                  "outcome predictions cover " + std::to_string(mu.size()) +
                      " units, dataset has " + std::to_string(n));
    }
  }
}

double mu_at(const NuisanceFit& nf, int z, int s, Eigen::Index i) {
  const Eigen::VectorXd& mu = nf.mu_x[static_cast<std::size_t>(z * 2 + s)];
  return mu.size() == 0 ? 0.0 : mu[i];
}

}  // namespace

PsiSet compute_psi(const Dataset& ds, const NuisanceFit& nf, double trim) {
  check_sizes(ds, nf);
  Eigen::Index n = ds.n();
  Eigen::VectorXd pi = effective_pi(nf.pi_x, trim);
  PsiSet psi;
  psi.s1.resize(n);
  psi.s0.resize(n);
  psi.one_minus_s1.resize(n);
  psi.one_minus_s0.resize(n);
  psi.y1s1.resize(n);
  psi.y0s0.resize(n);
  psi.y1_one_minus_s1.resize(n);
  psi.y0_one_minus_s0.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = nf.p1_x[i];
    double p0 = nf.p0_x[i];
    double s = static_cast<double>(ds.s[i]);
    double y = ds.y[i];
    // Conditional means of the functionals given X and each arm.
    double ey1s1 = mu_at(nf, 1, 1, i) * p1;
    double ey1q1 = mu_at(nf, 1, 0, i) * (1.0 - p1);
    double ey0s0 = mu_at(nf, 0, 1, i) * p0;
    double ey0q0 = mu_at(nf, 0, 0, i) * (1.0 - p0);
    if (ds.z[i] == 1) {
      double inv = 1.0 / pi[i];
      psi.s1[i] = (s - p1) * inv + p1;
      psi.one_minus_s1[i] = (p1 - s) * inv + (1.0 - p1);
      psi.y1s1[i] = (y * s - ey1s1) * inv + ey1s1;
      psi.y1_one_minus_s1[i] = (y * (1.0 - s) - ey1q1) * inv + ey1q1;
      psi.s0[i] = p0;
      psi.one_minus_s0[i] = 1.0 - p0;
      psi.y0s0[i] = ey0s0;
      psi.y0_one_minus_s0[i] = ey0q0;
    } else {
      double inv = 1.0 / (1.0 - pi[i]);
      psi.s1[i] = p1;
      psi.one_minus_s1[i] = 1.0 - p1;
      psi.y1s1[i] = ey1s1;
      psi.y1_one_minus_s1[i] = ey1q1;
      psi.s0[i] = (s - p0) * inv + p0;
      psi.one_minus_s0[i] = (p0 - s) * inv + (1.0 - p0);
      psi.y0s0[i] = (y * s - ey0s0) * inv + ey0s0;
      psi.y0_one_minus_s0[i] = (y * (1.0 - s) - ey0q0) * inv + ey0q0;
    }
  }
  return psi;
}

namespace detail {

PhiSet phi_weighted(const Dataset& ds, const NuisanceFit& nf, const PsiSet& psi,
                    const MixWeights& mix) {
  check_sizes(ds, nf);
  Eigen::Index n = ds.n();
  PhiSet phi;
  phi.phi1_10.resize(n);
  phi.phi0_10.resize(n);
  phi.phi1_00.resize(n);
  phi.phi0_00.resize(n);
  phi.phi1_11.resize(n);
  phi.phi0_11.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = nf.p1_x[i];
    double p0 = nf.p0_x[i];
    if (p1 == 0.0) {
      throw Error(ErrorKind::kDivisionByZero,
                  "unit " + std::to_string(i + 1) + ": p1(x) = 0 in the influence function");
    }
    if (p0 == 1.0) {
      throw Error(ErrorKind::kDivisionByZero,
                  "unit " + std::to_string(i + 1) + ": p0(x) = 1 in the influence function");
    }
    double e10 = p1 - p0;
    double e00 = 1.0 - p1;
    double e11 = p0;
    double mu11 = mu_at(nf, 1, 1, i);
    double mu00 = mu_at(nf, 0, 0, i);
    double bracket1 = psi.s0[i] - (p0 / p1) * psi.s1[i];
    double bracket0 = psi.one_minus_s1[i] - ((1.0 - p1) / (1.0 - p0)) * psi.one_minus_s0[i];

    double w1_10 = mix.w1_10.size() ? mix.w1_10[i] : 1.0;
    double w0_10 = mix.w0_10.size() ? mix.w0_10[i] : 1.0;
    double w0_00 = mix.w0_00.size() ? mix.w0_00[i] : 1.0;
    double w1_11 = mix.w1_11.size() ? mix.w1_11[i] : 1.0;
    double b1_10 = mix.w1_10.size() ? (w1_10 * w1_10) / mix.eps1[i] : 1.0;
    double b0_10 = mix.w0_10.size() ? (w0_10 * w0_10) / mix.eps0[i] : 1.0;
    double b0_00 = mix.w0_00.size() ? (w0_00 * w0_00) / mix.eps0[i] : 1.0;
    double b1_11 = mix.w1_11.size() ? (w1_11 * w1_11) / mix.eps1[i] : 1.0;

    phi.phi1_10[i] = w1_10 * (e10 / p1) * psi.y1s1[i] - (b1_10 * mu11) * bracket1;
    phi.phi0_10[i] = w0_10 * (e10 / (1.0 - p0)) * psi.y0_one_minus_s0[i] -
                     (b0_10 * mu00) * bracket0;
    phi.phi1_00[i] = psi.y1_one_minus_s1[i];
    phi.phi0_00[i] = w0_00 * (e00 / (1.0 - p0)) * psi.y0_one_minus_s0[i] +
                     (b0_00 * mu00) * bracket0;
    phi.phi1_11[i] = w1_11 * (e11 / p1) * psi.y1s1[i] + (b1_11 * mu11) * bracket1;
    phi.phi0_11[i] = psi.y0s0[i];
  }
  return phi;
}

PceEstimate tr_from_phi(const NuisanceFit& nf, const PsiSet& psi, const PhiSet& phi,
                        const std::string& label) {
  PceEstimate est;
  est.estimator = label;
  double d10 = (psi.s1 - psi.s0).mean();
  double d00 = psi.one_minus_s1.mean();
  double d11 = psi.s0.mean();
  est.proportions = {d10, d00, d11};
  if (!(d10 > 0.0)) {
    throw Error(ErrorKind::kDegenerateStratum,
                "stratum 10: mean(psi_S1 - psi_S0) = " + format_double(d10));
  }
  if (!(d00 > 0.0)) {
    throw Error(ErrorKind::kDegenerateStratum,
                "stratum 00: mean(psi_{1-S1}) = " + format_double(d00));
  }
  est.tau[kS10] = (phi.phi1_10 - phi.phi0_10).mean() / d10;
  est.tau[kS00] = (phi.phi1_00 - phi.phi0_00).mean() / d00;
  if (nf.strong_monotonicity) {
    est.tau[kS11] = kNaN;
    est.warnings.push_back("tau_11 not applicable under strong monotonicity");
  } else {
    if (!(d11 > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum,
                  "stratum 11: mean(psi_S0) = " + format_double(d11));
    }
    est.tau[kS11] = (phi.phi1_11 - phi.phi0_11).mean() / d11;
  }
  return est;
}

PceEstimate tp_ps_weighted(const Dataset& ds, const NuisanceFit& nf, const MixWeights& mix,
                           const EstimatorOptions& options, const std::string& label) {
  check_sizes(ds, nf);
  Eigen::Index n = ds.n();
  Eigen::VectorXd pi = effective_pi(nf.pi_x, options.trim);
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  MarginalProportions mp =
      marginal_proportions(scores, options.marginal_mode, pi, ds.z, ds.s);

  // Weighted outcome sums and realized weight sums, per stratum and arm.
  double num1_10 = 0, den1_10 = 0, num0_10 = 0, den0_10 = 0;
  double num1_00 = 0, den1_00 = 0, num0_00 = 0, den0_00 = 0;
  double num1_11 = 0, den1_11 = 0, num0_11 = 0, den0_11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = nf.p1_x[i];
    double p0 = nf.p0_x[i];
    double e10 = p1 - p0;
    double e00 = 1.0 - p1;
    double e11 = p0;
    double y = ds.y[i];
    // Ratios with an indicator in the numerator are 0 whenever the fitted
    // denominator is 0; the matching stratum shares vanish there too.
    if (ds.z[i] == 1) {
      double inv = 1.0 / pi[i];
      if (ds.s[i] == 1) {
        double r10 = p1 > 0.0 ? e10 / p1 : 0.0;
        double r11 = p1 > 0.0 ? e11 / p1 : 0.0;
        double w10 = (mix.w1_10.size() ? mix.w1_10[i] : 1.0) * r10 * inv;
        double w11 = (mix.w1_11.size() ? mix.w1_11[i] : 1.0) * r11 * inv;
        num1_10 += w10 * y;
        den1_10 += w10;
        num1_11 += w11 * y;
        den1_11 += w11;
      } else {
        double w00 = inv;  // (1-S)Z/pi, never omega-corrected
        num1_00 += w00 * y;
        den1_00 += w00;
      }
    } else {
      double inv = 1.0 / (1.0 - pi[i]);
      if (ds.s[i] == 0) {
        double r10 = p0 < 1.0 ? e10 / (1.0 - p0) : 0.0;
        double r00 = p0 < 1.0 ? e00 / (1.0 - p0) : 0.0;
        double w10 = (mix.w0_10.size() ? mix.w0_10[i] : 1.0) * r10 * inv;
        double w00 = (mix.w0_00.size() ? mix.w0_00[i] : 1.0) * r00 * inv;
        num0_10 += w10 * y;
        den0_10 += w10;
        num0_00 += w00 * y;
        den0_00 += w00;
      } else {
        double w11 = inv;  // S(1-Z)/(1-pi), never omega-corrected
        num0_11 += w11 * y;
        den0_11 += w11;
      }
    }
  }

  PceEstimate est;
  est.estimator = label;
  est.proportions = {mp.e10, mp.e00, mp.e11};
  for (const auto& w : scores.warnings) est.warnings.push_back(w);
  double dn = static_cast<double>(n);

  auto stabilized_arm = [&](double num, double den, const char* stratum, const char* arm) {
    if (!(den > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum, std::string("stratum ") + stratum + ", arm " +
                                                     arm + ": realized weight sum = " +
                                                     format_double(den));
    }
    return num / den;
  };
  auto marginal_den = [&](double value, const char* stratum) {
    if (!(value > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum, std::string("stratum ") + stratum +
                                                     ": estimated proportion = " +
                                                     format_double(value));
    }
    return value;
  };

  if (options.stabilized) {
    est.tau[kS10] = stabilized_arm(num1_10, den1_10, "10", "z=1") -
                    stabilized_arm(num0_10, den0_10, "10", "z=0");
    est.tau[kS00] = stabilized_arm(num1_00, den1_00, "00", "z=1") -
                    stabilized_arm(num0_00, den0_00, "00", "z=0");
  } else {
    est.tau[kS10] = (num1_10 / dn - num0_10 / dn) / marginal_den(mp.e10, "10");
    est.tau[kS00] = (num1_00 / dn - num0_00 / dn) / marginal_den(mp.e00, "00");
  }
  if (nf.strong_monotonicity) {
    est.tau[kS11] = kNaN;
    est.warnings.push_back("tau_11 not applicable under strong monotonicity");
  } else if (options.stabilized) {
    est.tau[kS11] = stabilized_arm(num1_11, den1_11, "11", "z=1") -
                    stabilized_arm(num0_11, den0_11, "11", "z=0");
  } else {
    est.tau[kS11] = (num1_11 / dn - num0_11 / dn) / marginal_den(mp.e11, "11");
  }
  return est;
}

}  // namespace detail

PhiSet compute_phi(const Dataset& ds, const NuisanceFit& nf, const PsiSet& psi) {
  return detail::phi_weighted(ds, nf, psi, detail::MixWeights{});
}

PceEstimate estimate_tp_ps(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options) {
  return detail::tp_ps_weighted(ds, nf, detail::MixWeights{}, options,
                                options.stabilized ? "tp-ps-stab" : "tp-ps");
}

PceEstimate estimate_tp_om(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options) {
  check_sizes(ds, nf);
  Eigen::Index n = ds.n();
  Eigen::VectorXd pi = effective_pi(nf.pi_x, options.trim);
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  MarginalProportions mp =
      marginal_proportions(scores, options.marginal_mode, pi, ds.z, ds.s);

  double num10 = 0, den10 = 0;
  double num00 = 0, den00 = 0;
  double num11 = 0, den11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double c10 = mu_at(nf, 1, 1, i) - mu_at(nf, 0, 0, i);
    double c00 = mu_at(nf, 1, 0, i) - mu_at(nf, 0, 0, i);
    double c11 = mu_at(nf, 1, 1, i) - mu_at(nf, 0, 1, i);
    if (ds.z[i] == 1) {
      double inv = 1.0 / pi[i];
      if (ds.s[i] == 1) {
        num10 += inv * c10;
        den10 += inv;
      } else {
        num00 += inv * c00;
        den00 += inv;
      }
    } else {
      double inv = 1.0 / (1.0 - pi[i]);
      if (ds.s[i] == 1) {
        num10 -= inv * c10;
        den10 -= inv;
        num11 += inv * c11;
        den11 += inv;
      }
    }
  }

  PceEstimate est;
  est.estimator = options.stabilized ? "tp-om-stab" : "tp-om";
  est.proportions = {mp.e10, mp.e00, mp.e11};
  for (const auto& w : scores.warnings) est.warnings.push_back(w);
  double dn = static_cast<double>(n);

  auto ratio = [&](double num, double den, const char* stratum) {
    if (!(den > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum, std::string("stratum ") + stratum +
                                                     ": realized weight sum = " +
                                                     format_double(den));
    }
    return num / den;
  };
  auto marginal_den = [&](double value, const char* stratum) {
    if (!(value > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum, std::string("stratum ") + stratum +
                                                     ": estimated proportion = " +
                                                     format_double(value));
    }
    return value;
  };

  if (options.stabilized) {
    est.tau[kS10] = ratio(num10, den10, "10");
    est.tau[kS00] = ratio(num00, den00, "00");
  } else {
    est.tau[kS10] = (num10 / dn) / marginal_den(mp.e10, "10");
    est.tau[kS00] = (num00 / dn) / marginal_den(mp.e00, "00");
  }
  if (nf.strong_monotonicity) {
    est.tau[kS11] = kNaN;
    est.warnings.push_back("tau_11 not applicable under strong monotonicity");
  } else if (options.stabilized) {
    est.tau[kS11] = ratio(num11, den11, "11");
  } else {
    est.tau[kS11] = (num11 / dn) / marginal_den(mp.e11, "11");
  }
  return est;
}

PceEstimate estimate_ps_om(const Dataset& ds, const NuisanceFit& nf,
                           const EstimatorOptions& options) {
  check_sizes(ds, nf);
  Eigen::Index n = ds.n();
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  Eigen::VectorXd pi;
  if (options.marginal_mode == MarginalMode::kDoublyRobust) {
    pi = effective_pi(nf.pi_x, options.trim);
  }
  MarginalProportions mp =
      marginal_proportions(scores, options.marginal_mode, pi, ds.z, ds.s);

  double num10 = 0, num00 = 0, num11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double c10 = mu_at(nf, 1, 1, i) - mu_at(nf, 0, 0, i);
    double c00 = mu_at(nf, 1, 0, i) - mu_at(nf, 0, 0, i);
    double c11 = mu_at(nf, 1, 1, i) - mu_at(nf, 0, 1, i);
    num10 += scores.e10[i] * c10;
    num00 += scores.e00[i] * c00;
    num11 += scores.e11[i] * c11;
  }

  PceEstimate est;
  est.estimator = "ps-om";
  est.proportions = {mp.e10, mp.e00, mp.e11};
  for (const auto& w : scores.warnings) est.warnings.push_back(w);
  double dn = static_cast<double>(n);

  auto marginal_den = [&](double value, const char* stratum) {
    if (!(value > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum, std::string("stratum ") + stratum +
                                                     ": estimated proportion = " +
                                                     format_double(value));
    }
    return value;
  };

  est.tau[kS10] = (num10 / dn) / marginal_den(mp.e10, "10");
  est.tau[kS00] = (num00 / dn) / marginal_den(mp.e00, "00");
  if (nf.strong_monotonicity) {
    est.tau[kS11] = kNaN;
    est.warnings.push_back("tau_11 not applicable under strong monotonicity");
  } else {
    est.tau[kS11] = (num11 / dn) / marginal_den(mp.e11, "11");
  }
  return est;
}

PceEstimate estimate_triply_robust(const Dataset& ds, const NuisanceFit& nf,
                                   const EstimatorOptions& options) {
  PsiSet psi = compute_psi(ds, nf, options.trim);
  PhiSet phi = compute_phi(ds, nf, psi);
  return detail::tr_from_phi(nf, psi, phi, "triply-robust");
}

std::vector<FamilyResult> estimate_all(const Dataset& ds, const NuisanceFit& nf,
                                       const EstimatorOptions& options) {
  std::vector<FamilyResult> out;
  out.reserve(kEstimatorFamilies.size());
  for (const char* family : kEstimatorFamilies) {
    FamilyResult fr;
    fr.estimator = family;
    EstimatorOptions opt = options;
    try {
      std::string name = family;
      if (name == "tp-ps") {
        opt.stabilized = false;
        fr.estimate = estimate_tp_ps(ds, nf, opt);
      } else if (name == "tp-ps-stab") {
        opt.stabilized = true;
        fr.estimate = estimate_tp_ps(ds, nf, opt);
      } else if (name == "tp-om") {
        opt.stabilized = false;
        fr.estimate = estimate_tp_om(ds, nf, opt);
      } else if (name == "ps-om") {
        fr.estimate = estimate_ps_om(ds, nf, opt);
      } else {
        fr.estimate = estimate_triply_robust(ds, nf, opt);
      }
    } catch (const Error& e) {
      fr.error = e.what();
    }
    out.push_back(std::move(fr));
  }
  return out;
}

}  // namespace pce
