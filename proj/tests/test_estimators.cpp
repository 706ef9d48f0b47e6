#include <cmath>

#include "doctest.h"
#include "pce/estimators.hpp"
#include "pce/rng.hpp"
#include "pce/simulate.hpp"

namespace {

// Hand-built fit with constant nuisance values, so every estimator can be
// recomputed in plain loops next to the vectorized library code.
struct ConstNuisance {
  double pi = 0.4;
  double p1 = 0.7;
  double p0 = 0.3;
  double mu00 = 1.0, mu01 = 2.0, mu10 = 3.0, mu11 = 4.0;
};

pce::NuisanceFit fill_fit(const pce::Dataset& ds, const ConstNuisance& c) {
  pce::NuisanceFit nf;
  Eigen::Index n = ds.n();
  nf.pi_x = Eigen::VectorXd::Constant(n, c.pi);
  nf.p1_x = Eigen::VectorXd::Constant(n, c.p1);
  nf.p0_x = Eigen::VectorXd::Constant(n, c.p0);
  nf.mu_x[0] = Eigen::VectorXd::Constant(n, c.mu00);
  nf.mu_x[1] = Eigen::VectorXd::Constant(n, c.mu01);
  nf.mu_x[2] = Eigen::VectorXd::Constant(n, c.mu10);
  nf.mu_x[3] = Eigen::VectorXd::Constant(n, c.mu11);
  nf.has_om = {true, true, true, true};
  return nf;
}

pce::Dataset random_dataset(Eigen::Index n, std::uint64_t seed) {
  pce::Rng rng(seed, 1);
  Eigen::VectorXi z(n), s(n);
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = rng.bernoulli(0.45);
    s[i] = rng.bernoulli(z[i] == 1 ? 0.8 : 0.2);
    y[i] = 1.0 + 2.0 * rng.normal();
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
  }
  return pce::make_dataset(z, s, y, x);
}

// Doubly robust marginal shares, written out longhand.
void naive_marginals(const pce::Dataset& ds, const pce::NuisanceFit& nf, double* e10,
                     double* e00, double* e11) {
  double sum1 = 0, sum0 = 0;
  Eigen::Index n = ds.n();
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = nf.p1_x[i], p0 = nf.p0_x[i], pi = nf.pi_x[i];
    double s = ds.s[i];
    if (ds.z[i] == 1) {
      sum1 += (s - p1) / pi + p1;
      sum0 += p0;
    } else {
      sum1 += p1;
      sum0 += (s - p0) / (1.0 - pi) + p0;
    }
  }
  double p1bar = sum1 / static_cast<double>(n);
  double p0bar = sum0 / static_cast<double>(n);
  *e10 = p1bar - p0bar;
  *e00 = 1.0 - p1bar;
  *e11 = p0bar;
}

struct NaivePsi {
  double s1, s0, q1, q0;  // q = 1 - s counterparts
  double y1s1, y0s0, y1q1, y0q0;
};

NaivePsi naive_psi(int z, int s_, double y, double p1, double p0, double pi, double mu00,
                   double mu01, double mu10, double mu11) {
  NaivePsi o;
  double s = s_;
  double ey1s1 = mu11 * p1, ey1q1 = mu10 * (1.0 - p1);
  double ey0s0 = mu01 * p0, ey0q0 = mu00 * (1.0 - p0);
  if (z == 1) {
    o.s1 = (s - p1) / pi + p1;
    o.q1 = ((1.0 - s) - (1.0 - p1)) / pi + (1.0 - p1);
    o.y1s1 = (y * s - ey1s1) / pi + ey1s1;
    o.y1q1 = (y * (1.0 - s) - ey1q1) / pi + ey1q1;
    o.s0 = p0;
    o.q0 = 1.0 - p0;
    o.y0s0 = ey0s0;
    o.y0q0 = ey0q0;
  } else {
    o.s1 = p1;
    o.q1 = 1.0 - p1;
    o.y1s1 = ey1s1;
    o.y1q1 = ey1q1;
    o.s0 = (s - p0) / (1.0 - pi) + p0;
    o.q0 = ((1.0 - s) - (1.0 - p0)) / (1.0 - pi) + (1.0 - p0);
    o.y0s0 = (y * s - ey0s0) / (1.0 - pi) + ey0s0;
    o.y0q0 = (y * (1.0 - s) - ey0q0) / (1.0 - pi) + ey0q0;
  }
  return o;
}

}  // namespace

TEST_CASE("weighting estimator matches a longhand reimplementation") {
  pce::Dataset ds = random_dataset(60, 501);
  ConstNuisance c;
  pce::NuisanceFit nf = fill_fit(ds, c);
  Eigen::Index n = ds.n();
  double dn = static_cast<double>(n);

  double e10 = c.p1 - c.p0, e00 = 1.0 - c.p1, e11 = c.p0;
  double num1_10 = 0, num0_10 = 0, den1_10 = 0, den0_10 = 0;
  double num1_00 = 0, num0_00 = 0, den1_00 = 0, den0_00 = 0;
  double num1_11 = 0, num0_11 = 0, den1_11 = 0, den0_11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double y = ds.y[i];
    double z = ds.z[i], s = ds.s[i];
    double w;
    w = e10 * s * z / (c.p1 * c.pi);
    num1_10 += w * y;
    den1_10 += w;
    w = e10 * (1 - s) * (1 - z) / ((1.0 - c.p0) * (1.0 - c.pi));
    num0_10 += w * y;
    den0_10 += w;
    w = (1 - s) * z / c.pi;
    num1_00 += w * y;
    den1_00 += w;
    w = e00 * (1 - s) * (1 - z) / ((1.0 - c.p0) * (1.0 - c.pi));
    num0_00 += w * y;
    den0_00 += w;
    w = e11 * s * z / (c.p1 * c.pi);
    num1_11 += w * y;
    den1_11 += w;
    w = s * (1 - z) / (1.0 - c.pi);
    num0_11 += w * y;
    den0_11 += w;
  }
  double m10, m00, m11;
  naive_marginals(ds, nf, &m10, &m00, &m11);

  pce::PceEstimate plain = pce::estimate_tp_ps(ds, nf);
  CHECK(plain.estimator == "tp-ps");
  CHECK(plain.tau[0] ==
        doctest::Approx((num1_10 / dn - num0_10 / dn) / m10).epsilon(1e-12));
  CHECK(plain.tau[1] ==
        doctest::Approx((num1_00 / dn - num0_00 / dn) / m00).epsilon(1e-12));
  CHECK(plain.tau[2] ==
        doctest::Approx((num1_11 / dn - num0_11 / dn) / m11).epsilon(1e-12));
  CHECK(plain.proportions[0] == doctest::Approx(m10).epsilon(1e-12));

  pce::EstimatorOptions stab;
  stab.stabilized = true;
  pce::PceEstimate ratio = pce::estimate_tp_ps(ds, nf, stab);
  CHECK(ratio.estimator == "tp-ps-stab");
  CHECK(ratio.tau[0] ==
        doctest::Approx(num1_10 / den1_10 - num0_10 / den0_10).epsilon(1e-12));
  CHECK(ratio.tau[1] ==
        doctest::Approx(num1_00 / den1_00 - num0_00 / den0_00).epsilon(1e-12));
  CHECK(ratio.tau[2] ==
        doctest::Approx(num1_11 / den1_11 - num0_11 / den0_11).epsilon(1e-12));
}

TEST_CASE("regression estimators match longhand reimplementations") {
  pce::Dataset ds = random_dataset(60, 502);
  ConstNuisance c;
  pce::NuisanceFit nf = fill_fit(ds, c);
  Eigen::Index n = ds.n();
  double dn = static_cast<double>(n);
  double m10, m00, m11;
  naive_marginals(ds, nf, &m10, &m00, &m11);

  double c10 = c.mu11 - c.mu00, c00 = c.mu10 - c.mu00, c11 = c.mu11 - c.mu01;

  SUBCASE("treatment probability and outcome mean") {
    double num10 = 0, num00 = 0, num11 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double z = ds.z[i], s = ds.s[i];
      num10 += (s * z / c.pi - s * (1 - z) / (1.0 - c.pi)) * c10;
      num00 += ((1 - s) * z / c.pi) * c00;
      num11 += (s * (1 - z) / (1.0 - c.pi)) * c11;
    }
    pce::PceEstimate est = pce::estimate_tp_om(ds, nf);
    CHECK(est.estimator == "tp-om");
    CHECK(est.tau[0] == doctest::Approx((num10 / dn) / m10).epsilon(1e-12));
    CHECK(est.tau[1] == doctest::Approx((num00 / dn) / m00).epsilon(1e-12));
    CHECK(est.tau[2] == doctest::Approx((num11 / dn) / m11).epsilon(1e-12));
  }

  SUBCASE("principal score and outcome mean") {
    double e10 = c.p1 - c.p0, e00 = 1.0 - c.p1, e11 = c.p0;
    pce::PceEstimate est = pce::estimate_ps_om(ds, nf);
    CHECK(est.estimator == "ps-om");
    CHECK(est.tau[0] == doctest::Approx(e10 * c10 / m10).epsilon(1e-12));
    CHECK(est.tau[1] == doctest::Approx(e00 * c00 / m00).epsilon(1e-12));
    CHECK(est.tau[2] == doctest::Approx(e11 * c11 / m11).epsilon(1e-12));
  }

  SUBCASE("plugin marginals divide by plain score means instead") {
    pce::EstimatorOptions opt;
    opt.marginal_mode = pce::MarginalMode::kPlugin;
    pce::PceEstimate est = pce::estimate_ps_om(ds, nf, opt);
    double e10 = c.p1 - c.p0, e00 = 1.0 - c.p1, e11 = c.p0;
    // constant scores: the plugin marginal is the constant itself
    CHECK(est.tau[0] == doctest::Approx(c10).epsilon(1e-12));
    CHECK(est.proportions[0] == doctest::Approx(e10).epsilon(1e-15));
    CHECK(est.proportions[1] == doctest::Approx(e00).epsilon(1e-15));
    CHECK(est.proportions[2] == doctest::Approx(e11).epsilon(1e-15));
  }
}

TEST_CASE("influence function estimator matches a longhand reimplementation") {
  pce::Dataset ds = random_dataset(80, 503);
  ConstNuisance c;
  pce::NuisanceFit nf = fill_fit(ds, c);
  Eigen::Index n = ds.n();

  double sum1_10 = 0, sum0_10 = 0, sum1_00 = 0, sum0_00 = 0, sum1_11 = 0, sum0_11 = 0;
  double d10 = 0, d00 = 0, d11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    NaivePsi o = naive_psi(ds.z[i], ds.s[i], ds.y[i], c.p1, c.p0, c.pi, c.mu00, c.mu01,
                           c.mu10, c.mu11);
    double e10 = c.p1 - c.p0, e00 = 1.0 - c.p1, e11 = c.p0;
    double b1 = o.s0 - (c.p0 / c.p1) * o.s1;
    double b0 = o.q1 - ((1.0 - c.p1) / (1.0 - c.p0)) * o.q0;
    sum1_10 += (e10 / c.p1) * o.y1s1 - c.mu11 * b1;
    sum0_10 += (e10 / (1.0 - c.p0)) * o.y0q0 - c.mu00 * b0;
    sum1_00 += o.y1q1;
    sum0_00 += (e00 / (1.0 - c.p0)) * o.y0q0 + c.mu00 * b0;
    sum1_11 += (e11 / c.p1) * o.y1s1 + c.mu11 * b1;
    sum0_11 += o.y0s0;
    d10 += o.s1 - o.s0;
    d00 += o.q1;
    d11 += o.s0;
  }

  pce::PceEstimate est = pce::estimate_triply_robust(ds, nf);
  CHECK(est.estimator == "triply-robust");
  CHECK(est.tau[0] == doctest::Approx((sum1_10 - sum0_10) / d10).epsilon(1e-12));
  CHECK(est.tau[1] == doctest::Approx((sum1_00 - sum0_00) / d00).epsilon(1e-12));
  CHECK(est.tau[2] == doctest::Approx((sum1_11 - sum0_11) / d11).epsilon(1e-12));
  CHECK(est.proportions[0] ==
        doctest::Approx(d10 / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("psi transforms keep their algebraic identities under fitted models") {
  for (std::uint64_t seed : {11, 12, 13}) {
    pce::DgpSpec dgp;
    dgp.n = 800;
    dgp.seed = seed;
    pce::Dataset ds = pce::generate(dgp, 0);
    pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});
    pce::PsiSet psi = pce::compute_psi(ds, nf);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      worst = std::max(worst, std::abs(psi.s1[i] + psi.one_minus_s1[i] - 1.0));
      worst = std::max(worst, std::abs(psi.s0[i] + psi.one_minus_s0[i] - 1.0));
    }
    CHECK(worst <= 1e-12);

    // the off-arm entries are bare conditional means
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      if (ds.z[i] == 1) {
        CHECK(psi.s0[i] == nf.p0_x[i]);
      } else {
        CHECK(psi.s1[i] == nf.p1_x[i]);
      }
    }
  }
}

TEST_CASE("phi_1_10 equals its model-assisted decomposition per unit") {
  pce::DgpSpec dgp;
  dgp.n = 1500;
  dgp.seed = 29;
  pce::Dataset ds = pce::generate(dgp, 0);
  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});
  pce::PsiSet psi = pce::compute_psi(ds, nf);
  pce::PhiSet phi = pce::compute_phi(ds, nf, psi);

  double worst = 0.0;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    double p1 = nf.p1_x[i], p0 = nf.p0_x[i], pi = nf.pi_x[i];
    double e10 = p1 - p0;
    double mu11 = nf.mu_x[3][i];
    double z = ds.z[i], s = ds.s[i];
    double direct = e10 * (s / p1) * (z / pi) * (ds.y[i] - mu11) +
                    mu11 * (psi.s1[i] - psi.s0[i]);
    worst = std::max(worst, std::abs(phi.phi1_10[i] - direct));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("constant outcomes give exactly zero effects") {
  pce::Dataset base = random_dataset(120, 504);
  pce::Dataset ds =
      pce::make_dataset(base.z, base.s, Eigen::VectorXd::Constant(base.n(), 3.7), base.x);
  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});

  pce::PceEstimate tr = pce::estimate_triply_robust(ds, nf);
  pce::PceEstimate om = pce::estimate_tp_om(ds, nf);
  pce::PceEstimate po = pce::estimate_ps_om(ds, nf);
  pce::EstimatorOptions stab;
  stab.stabilized = true;
  pce::PceEstimate ps = pce::estimate_tp_ps(ds, nf, stab);
  for (int u = 0; u < 3; ++u) {
    CHECK(std::abs(tr.tau[u]) <= 1e-12);
    CHECK(std::abs(om.tau[u]) <= 1e-12);
    CHECK(std::abs(po.tau[u]) <= 1e-12);
    CHECK(std::abs(ps.tau[u]) <= 1e-12);
  }
}

TEST_CASE("affine outcome transforms scale the estimates") {
  pce::DgpSpec dgp;
  dgp.n = 1200;
  dgp.seed = 31;
  pce::Dataset ds = pce::generate(dgp, 0);
  pce::Dataset moved =
      pce::make_dataset(ds.z, ds.s, (2.5 * ds.y.array() - 4.0).matrix(), ds.x);

  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});
  pce::NuisanceFit nf2 = pce::fit_nuisance(moved, {}, {}, {});

  pce::PceEstimate tr1 = pce::estimate_triply_robust(ds, nf);
  pce::PceEstimate tr2 = pce::estimate_triply_robust(moved, nf2);
  pce::PceEstimate om1 = pce::estimate_tp_om(ds, nf);
  pce::PceEstimate om2 = pce::estimate_tp_om(moved, nf2);
  pce::PceEstimate po1 = pce::estimate_ps_om(ds, nf);
  pce::PceEstimate po2 = pce::estimate_ps_om(moved, nf2);
  for (int u = 0; u < 3; ++u) {
    CHECK(tr2.tau[u] == doctest::Approx(2.5 * tr1.tau[u]).epsilon(1e-8));
    CHECK(om2.tau[u] == doctest::Approx(2.5 * om1.tau[u]).epsilon(1e-8));
    CHECK(po2.tau[u] == doctest::Approx(2.5 * po1.tau[u]).epsilon(1e-8));
  }
}

TEST_CASE("trim clamps the fitted treatment probabilities") {
  pce::Dataset ds = random_dataset(50, 505);
  ConstNuisance c;
  pce::NuisanceFit nf = fill_fit(ds, c);
  nf.pi_x[7] = 0.001;
  nf.pi_x[13] = 0.999;

  pce::NuisanceFit clamped = nf;
  clamped.pi_x[7] = 0.05;
  clamped.pi_x[13] = 0.95;

  pce::EstimatorOptions opt;
  opt.trim = 0.05;
  pce::PceEstimate trimmed = pce::estimate_triply_robust(ds, nf, opt);
  pce::PceEstimate direct = pce::estimate_triply_robust(ds, clamped);
  for (int u = 0; u < 3; ++u) CHECK(trimmed.tau[u] == direct.tau[u]);
}

TEST_CASE("positivity and division guards name the offending unit") {
  pce::Dataset ds = random_dataset(50, 506);
  ConstNuisance c;

  pce::NuisanceFit nf = fill_fit(ds, c);
  nf.pi_x[4] = 0.0;
  try {
    pce::estimate_triply_robust(ds, nf);
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(e.kind() == pce::ErrorKind::kPositivityViolation);
    CHECK(std::string(e.what()).find("unit 5: pi(x) = 0") != std::string::npos);
  }

  nf = fill_fit(ds, c);
  nf.p1_x[2] = 0.0;
  pce::PsiSet psi = pce::compute_psi(ds, nf);
  try {
    pce::compute_phi(ds, nf, psi);
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(e.kind() == pce::ErrorKind::kDivisionByZero);
    CHECK(std::string(e.what()).find("unit 3: p1(x) = 0") != std::string::npos);
  }
}

TEST_CASE("degenerate strata are reported with their realized denominators") {
  // every treated unit has s=0 and every control unit s=1, with equal scores,
  // so the stratum-10 share is estimated at -1
  Eigen::Index n = 40;
  Eigen::VectorXi z(n), s(n);
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = i < n / 2 ? 1 : 0;
    s[i] = 1 - z[i];
    y[i] = static_cast<double>(i);
    x(i, 0) = 0.0;
  }
  pce::Dataset ds = pce::make_dataset(z, s, y, x);
  ConstNuisance c;
  c.pi = 0.5;
  c.p1 = 0.5;
  c.p0 = 0.5;
  pce::NuisanceFit nf = fill_fit(ds, c);

  try {
    pce::estimate_triply_robust(ds, nf);
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(e.kind() == pce::ErrorKind::kDegenerateStratum);
    CHECK(std::string(e.what()).find("stratum 10: mean(psi_S1 - psi_S0) = -1") !=
          std::string::npos);
  }

  try {
    pce::estimate_tp_ps(ds, nf);
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(std::string(e.what()).find("stratum 10: estimated proportion = -1") !=
          std::string::npos);
  }

  pce::EstimatorOptions stab;
  stab.stabilized = true;
  try {
    pce::estimate_tp_ps(ds, nf, stab);
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(std::string(e.what()).find("stratum 10, arm z=1: realized weight sum = 0") !=
          std::string::npos);
  }
}

TEST_CASE("estimate_all captures per-family failures without aborting the rest") {
  pce::DgpSpec dgp;
  dgp.n = 600;
  dgp.seed = 40;
  pce::Dataset ds = pce::generate(dgp, 0);
  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});

  std::vector<pce::FamilyResult> all = pce::estimate_all(ds, nf);
  REQUIRE(all.size() == 5);
  CHECK(all[0].estimator == "tp-ps");
  CHECK(all[1].estimator == "tp-ps-stab");
  CHECK(all[2].estimator == "tp-om");
  CHECK(all[3].estimator == "ps-om");
  CHECK(all[4].estimator == "triply-robust");
  for (const auto& fr : all) {
    CHECK(fr.estimate.has_value());
    CHECK(fr.error.empty());
  }

  // break the treatment probabilities: every family that weights by pi fails,
  // ps-om (which never touches pi in plugin mode) keeps going
  pce::NuisanceFit broken = nf;
  broken.pi_x[0] = 0.0;
  pce::EstimatorOptions opt;
  opt.marginal_mode = pce::MarginalMode::kPlugin;
  std::vector<pce::FamilyResult> mixed = pce::estimate_all(ds, broken, opt);
  CHECK_FALSE(mixed[0].estimate.has_value());
  CHECK(mixed[0].error.find("pi(x) = 0") != std::string::npos);
  CHECK(mixed[3].estimate.has_value());
}

TEST_CASE("strong monotonicity mode reports tau_11 as not applicable") {
  pce::OneSidedDgpSpec dgp;
  dgp.n = 2500;
  dgp.seed = 8;
  pce::Dataset ds = pce::generate_one_sided(dgp, 0);
  pce::FitOptions fo;
  fo.strong_monotonicity = true;
  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {}, fo);

  pce::PceEstimate tr = pce::estimate_triply_robust(ds, nf);
  CHECK(std::isnan(tr.tau[2]));
  CHECK(std::isfinite(tr.tau[0]));
  CHECK(std::isfinite(tr.tau[1]));
  bool found = false;
  for (const auto& w : tr.warnings) {
    found = found || w == "tau_11 not applicable under strong monotonicity";
  }
  CHECK(found);

  pce::PceEstimate ps = pce::estimate_tp_ps(ds, nf);
  CHECK(std::isnan(ps.tau[2]));
  pce::PceEstimate om = pce::estimate_tp_om(ds, nf);
  CHECK(std::isnan(om.tau[2]));
}

TEST_CASE("triply robust tracks a longhand pass over fitted nuisances too") {
  pce::DgpSpec dgp;
  dgp.n = 900;
  dgp.seed = 55;
  pce::Dataset ds = pce::generate(dgp, 0);
  pce::NuisanceFit nf = pce::fit_nuisance(ds, {}, {}, {});

  Eigen::Index n = ds.n();
  double sum1_10 = 0, sum0_10 = 0, sum1_00 = 0, sum0_00 = 0, sum1_11 = 0, sum0_11 = 0;
  double d10 = 0, d00 = 0, d11 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = nf.p1_x[i], p0 = nf.p0_x[i];
    NaivePsi o = naive_psi(ds.z[i], ds.s[i], ds.y[i], p1, p0, nf.pi_x[i], nf.mu_x[0][i],
                           nf.mu_x[1][i], nf.mu_x[2][i], nf.mu_x[3][i]);
    double e10 = p1 - p0, e00 = 1.0 - p1, e11 = p0;
    double b1 = o.s0 - (p0 / p1) * o.s1;
    double b0 = o.q1 - ((1.0 - p1) / (1.0 - p0)) * o.q0;
    double mu11 = nf.mu_x[3][i], mu00 = nf.mu_x[0][i];
    sum1_10 += (e10 / p1) * o.y1s1 - mu11 * b1;
    sum0_10 += (e10 / (1.0 - p0)) * o.y0q0 - mu00 * b0;
    sum1_00 += o.y1q1;
    sum0_00 += (e00 / (1.0 - p0)) * o.y0q0 + mu00 * b0;
    sum1_11 += (e11 / p1) * o.y1s1 + mu11 * b1;
    sum0_11 += o.y0s0;
    d10 += o.s1 - o.s0;
    d00 += o.q1;
    d11 += o.s0;
  }

  pce::PceEstimate est = pce::estimate_triply_robust(ds, nf);
  CHECK(est.tau[0] == doctest::Approx((sum1_10 - sum0_10) / d10).epsilon(1e-12));
  CHECK(est.tau[1] == doctest::Approx((sum1_00 - sum0_00) / d00).epsilon(1e-12));
  CHECK(est.tau[2] == doctest::Approx((sum1_11 - sum0_11) / d11).epsilon(1e-12));
}
