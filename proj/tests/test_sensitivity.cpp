#include <cmath>

#include "doctest.h"
#include "pce/sensitivity.hpp"
#include "pce/simulate.hpp"

namespace {

pce::Dataset fitted_case(pce::NuisanceFit* nf, std::uint64_t seed = 61, Eigen::Index n = 1200) {
  pce::DgpSpec dgp;
  dgp.n = n;
  dgp.seed = seed;
  pce::Dataset ds = pce::generate(dgp, 0);
  *nf = pce::fit_nuisance(ds, {}, {}, {});
  return ds;
}

}  // namespace

TEST_CASE("epsilon of one leaves every odds correction at exactly one") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf);
  pce::OmegaSet om = pce::compute_omega(nf.scores(), {}, ds.x);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    CHECK(om.w1_10[i] == 1.0);
    CHECK(om.w0_10[i] == 1.0);
    CHECK(om.w0_00[i] == 1.0);
    CHECK(om.w1_11[i] == 1.0);
  }
}

TEST_CASE("odds corrections match their longhand form") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf);
  pce::SensitivitySpec spec;
  spec.eps1 = 1.4;
  spec.eps0 = 0.6;
  pce::PrincipalScores sc = nf.scores();
  pce::OmegaSet om = pce::compute_omega(sc, spec, ds.x);
  for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(7), ds.n() - 1}) {
    double e10 = std::max(sc.e10[i], 0.0);
    double e00 = sc.e00[i], e11 = sc.e11[i];
    double d1 = 1.4 * e10 + e11;
    double d0 = 0.6 * e10 + e00;
    CHECK(om.w1_10[i] == doctest::Approx((1.4 * e10 + 1.4 * e11) / d1).epsilon(1e-14));
    CHECK(om.w0_10[i] == doctest::Approx((0.6 * e10 + 0.6 * e00) / d0).epsilon(1e-14));
    CHECK(om.w0_00[i] == doctest::Approx((e10 + e00) / d0).epsilon(1e-14));
    CHECK(om.w1_11[i] == doctest::Approx((e10 + e11) / d1).epsilon(1e-14));
  }
  CHECK(om.eps1[0] == 1.4);
  CHECK(om.eps0[0] == 0.6);
}

TEST_CASE("covariate-dependent epsilon evaluates exp(-x'eta) per unit") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf);
  pce::SensitivitySpec spec;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(ds.k());
  eta[0] = 0.4;
  eta[2] = -0.1;
  spec.eta1 = eta;

  Eigen::VectorXd eps = spec.eps1_at(ds.x);
  for (Eigen::Index i : {Eigen::Index(3), Eigen::Index(11)}) {
    CHECK(eps[i] == doctest::Approx(std::exp(-ds.x.row(i).dot(eta))).epsilon(1e-14));
  }
  CHECK(spec.label1() == "exp(-[0.4,0,-0.1,0,0]'x)");
  CHECK(spec.label0() == "1");

  pce::SensitivitySpec constant;
  constant.eps1 = 1.5;
  CHECK(constant.label1() == "1.5");

  pce::SensitivitySpec wrong;
  wrong.eta1 = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(wrong.eps1_at(ds.x), pce::Error);

  pce::SensitivitySpec nonpositive;
  nonpositive.eps0 = 0.0;
  CHECK_THROWS_AS(nonpositive.eps0_at(ds.x), pce::Error);
}

TEST_CASE("identified point reproduces the base estimators bit for bit") {
  for (std::uint64_t seed : {71, 72, 73, 74}) {
    pce::NuisanceFit nf;
    pce::Dataset ds = fitted_case(&nf, seed, 900);

    pce::PceEstimate tr = pce::estimate_triply_robust(ds, nf);
    pce::PceEstimate dr = pce::estimate_sens_dr(ds, nf, {});
    CHECK(dr.estimator == "sens-dr");
    for (int u = 0; u < 3; ++u) CHECK(dr.tau[u] == tr.tau[u]);

    pce::PceEstimate psw = pce::estimate_tp_ps(ds, nf);
    pce::PceEstimate sw = pce::estimate_sens_weighting(ds, nf, {});
    CHECK(sw.estimator == "sens-weighting");
    for (int u = 0; u < 3; ++u) CHECK(sw.tau[u] == psw.tau[u]);
  }
}

TEST_CASE("moving epsilon moves the corrected estimates monotonically") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf);
  pce::SensitivitySpec low, high;
  low.eps1 = 0.5;
  low.eps0 = 0.5;
  high.eps1 = 2.0;
  high.eps0 = 2.0;

  pce::PceEstimate a = pce::estimate_sens_dr(ds, nf, low);
  pce::PceEstimate b = pce::estimate_sens_dr(ds, nf, {});
  pce::PceEstimate c = pce::estimate_sens_dr(ds, nf, high);
  // larger epsilon shifts outcome mass toward stratum 10 in both arms; the
  // corrected tau_10 must differ across the grid
  CHECK(a.tau[0] != b.tau[0]);
  CHECK(b.tau[0] != c.tau[0]);
}

TEST_CASE("sweep keeps one row per spec and absorbs failures") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf);

  std::vector<pce::SensitivitySpec> grid = pce::make_grid({0.5, 1.0}, {0.8});
  REQUIRE(grid.size() == 2);
  CHECK(grid[0].eps1 == 0.5);
  CHECK(grid[0].eps0 == 0.8);
  CHECK(grid[1].eps1 == 1.0);

  pce::SensitivitySpec bad;
  bad.eps1 = -2.0;
  grid.push_back(bad);

  std::vector<pce::SweepRow> rows =
      pce::sensitivity_sweep(ds, nf, grid, pce::SensMethod::kDoublyRobust);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].eps1_label == "0.5");
  CHECK(rows[0].eps0_label == "0.8");
  CHECK(std::isfinite(rows[0].estimate.tau[0]));
  CHECK(std::isnan(rows[2].estimate.tau[0]));
  CHECK(std::isnan(rows[2].estimate.tau[2]));
  REQUIRE_FALSE(rows[2].estimate.warnings.empty());
  CHECK(rows[2].estimate.warnings[0].find("eps1") != std::string::npos);

  std::vector<pce::SweepRow> weighted =
      pce::sensitivity_sweep(ds, nf, {pce::SensitivitySpec{}}, pce::SensMethod::kWeighting);
  CHECK(weighted[0].estimate.estimator == "sens-weighting");
}

TEST_CASE("default grid is the documented five-point ladder") {
  REQUIRE(pce::kDefaultEpsGrid.size() == 5);
  CHECK(pce::kDefaultEpsGrid[0] == 0.5);
  CHECK(pce::kDefaultEpsGrid[2] == 1.0);
  CHECK(pce::kDefaultEpsGrid[4] == 2.0);
}

TEST_CASE("negative fitted e10 is clamped only inside the correction") {
  Eigen::VectorXd p1(3), p0(3);
  p1 << 0.4, 0.6, 0.5;
  p0 << 0.5, 0.2, 0.5;  // first unit violates monotonicity
  pce::PrincipalScores sc = pce::strata_from_scores(p1, p0);
  pce::SensitivitySpec spec;
  spec.eps1 = 2.0;
  spec.eps0 = 2.0;
  pce::OmegaSet om = pce::compute_omega(sc, spec, Eigen::MatrixXd::Zero(3, 1));

  // clamped unit: e10 = 0, so both stratum-10 corrections collapse to eps
  CHECK(om.w1_10[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(om.w0_00[0] == doctest::Approx(0.5 / 0.5).epsilon(1e-14));
  bool clamped = false;
  for (const auto& w : om.warnings) {
    clamped = clamped || w.find("e10 clamped to 0 at 1 units") != std::string::npos;
  }
  CHECK(clamped);

  // a zero mixing denominator is refused outright
  Eigen::VectorXd z1(1), z0(1);
  z1 << 0.0;
  z0 << 0.0;
  pce::PrincipalScores degenerate;
  degenerate.p1 = z1;
  degenerate.p0 = z0;
  degenerate.e10 = z1;
  degenerate.e00 = Eigen::VectorXd::Ones(1);
  degenerate.e11 = z0;
  pce::SensitivitySpec any;
  try {
    pce::compute_omega(degenerate, any, Eigen::MatrixXd::Zero(1, 1));
    FAIL("expected a throw");
  } catch (const pce::Error& e) {
    CHECK(e.kind() == pce::ErrorKind::kNonPositiveDenominator);
    CHECK(std::string(e.what()).find("unit 1: eps1*e10 + e11 = 0") != std::string::npos);
  }
}

TEST_CASE("corrected weighting estimator matches a longhand pass") {
  pce::NuisanceFit nf;
  pce::Dataset ds = fitted_case(&nf, 62, 800);
  pce::SensitivitySpec spec;
  spec.eps1 = 1.5;
  spec.eps0 = 1.5;

  pce::PrincipalScores sc = nf.scores();
  pce::OmegaSet om = pce::compute_omega(sc, spec, ds.x);

  Eigen::Index n = ds.n();
  double dn = static_cast<double>(n);
  double num1_10 = 0, num0_10 = 0, num1_00 = 0, num0_00 = 0, num1_11 = 0, num0_11 = 0;
  double sum1 = 0, sum0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double p1 = sc.p1[i], p0 = sc.p0[i], pi = nf.pi_x[i];
    double e10 = sc.e10[i], e00 = sc.e00[i], e11 = sc.e11[i];
    double z = ds.z[i], s = ds.s[i], y = ds.y[i];
    num1_10 += om.w1_10[i] * e10 * s * z * y / (p1 * pi);
    num0_10 += om.w0_10[i] * e10 * (1 - s) * (1 - z) * y / ((1.0 - p0) * (1.0 - pi));
    num1_00 += (1 - s) * z * y / pi;
    num0_00 += om.w0_00[i] * e00 * (1 - s) * (1 - z) * y / ((1.0 - p0) * (1.0 - pi));
    num1_11 += om.w1_11[i] * e11 * s * z * y / (p1 * pi);
    num0_11 += s * (1 - z) * y / (1.0 - pi);
    if (z == 1) {
      sum1 += (s - p1) / pi + p1;
      sum0 += p0;
    } else {
      sum1 += p1;
      sum0 += (s - p0) / (1.0 - pi) + p0;
    }
  }
  double e10bar = (sum1 - sum0) / dn;
  double e00bar = 1.0 - sum1 / dn;
  double e11bar = sum0 / dn;

  pce::PceEstimate est = pce::estimate_sens_weighting(ds, nf, spec);
  CHECK(est.tau[0] ==
        doctest::Approx((num1_10 / dn - num0_10 / dn) / e10bar).epsilon(1e-12));
  CHECK(est.tau[1] ==
        doctest::Approx((num1_00 / dn - num0_00 / dn) / e00bar).epsilon(1e-12));
  CHECK(est.tau[2] ==
        doctest::Approx((num1_11 / dn - num0_11 / dn) / e11bar).epsilon(1e-12));
}
