#include "pce/simulate.hpp"

#include <cmath>
#include <limits>

#include "pce/parallel.hpp"

namespace pce {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

const double kRt2 = std::sqrt(2.0);

double c_lin(double v) { return v - 0.25; }
double c_quad(double v) { return (v * v - 1.0) / kRt2; }

// Alternating signs on the first four covariates.
constexpr double kSign[4] = {-1.0, 1.0, -1.0, 1.0};

double signed_sum4(const Eigen::RowVectorXd& x, bool linear) {
  double a = 0.0;
  for (int j = 0; j < 4; ++j) a += kSign[j] * (linear ? c_lin(x[j]) : c_quad(x[j]));
  return a;
}

double plain_sum(const Eigen::RowVectorXd& x, int count, bool linear) {
  double a = 0.0;
  for (int j = 0; j < count; ++j) a += linear ? c_lin(x[j]) : c_quad(x[j]);
  return a;
}

// Streaming moments for a ratio estimator mean(a)/mean(b) with a delta-method
// standard error.
struct RatioAcc {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  std::int64_t n = 0;

  void add(double a, double b) {
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
    ++n;
  }
  double mean_b() const { return sb / static_cast<double>(n); }
  double tau() const { return sa / sb; }
  double se() const {
    double dn = static_cast<double>(n);
    double ma = sa / dn;
    double mb = sb / dn;
    double t = sa / sb;
    double va = (saa - dn * ma * ma) / (dn - 1.0);
    double vb = (sbb - dn * mb * mb) / (dn - 1.0);
    double cab = (sab - dn * ma * mb) / (dn - 1.0);
    double v = va - 2.0 * t * cab + t * t * vb;
    if (v < 0.0) v = 0.0;
    return std::sqrt(v / dn) / std::abs(mb);
  }
};

void fill_truth(TruthResult& out, const RatioAcc acc[3], const char* what) {
  for (int u = 0; u < 3; ++u) {
    if (!(acc[u].mean_b() > 0.0)) {
      throw Error(ErrorKind::kDegenerateStratum,
                  std::string("stratum ") + kStratumLabel[u] + ": " + what + " = " +
                      format_double(acc[u].mean_b()));
    }
    out.tau[static_cast<std::size_t>(u)] = acc[u].tau();
    out.se[static_cast<std::size_t>(u)] = acc[u].se();
  }
}

}  // namespace

double dgp_pi(const DgpSpec& dgp, const Eigen::RowVectorXd& x) {
  if (dgp.tp_correct) return 0.5;
  return expit(0.4 * plain_sum(x, 4, false));
}

double dgp_pz(const DgpSpec& dgp, int z, const Eigen::RowVectorXd& x) {
  double a = signed_sum4(x, dgp.ps_correct);
  return expit((2.0 * z - 1.0) * (1.0 + 0.4 * a));
}

double dgp_mu(const DgpSpec& dgp, int z, int s, const Eigen::RowVectorXd& x) {
  return (1.0 + z + s) / 4.0 * plain_sum(x, 5, dgp.om_correct);
}

Eigen::MatrixXd draw_covariates(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd x(n, kDgpCovariates);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = 0.25 + rng.normal();
    x(i, 4) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  return x;
}

Dataset generate(const DgpSpec& dgp, int replicate) {
  Rng rng(dgp.seed, static_cast<std::uint64_t>(replicate) + 1);
  Eigen::Index n = dgp.n;
  Dataset ds;
  ds.z.resize(n);
  ds.s.resize(n);
  ds.y.resize(n);
  ds.x.resize(n, kDgpCovariates);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd row(kDgpCovariates);
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    ds.x.row(i) = row;
    int z = rng.bernoulli(dgp_pi(dgp, row)) ? 1 : 0;
    int s = rng.bernoulli(dgp_pz(dgp, z, row)) ? 1 : 0;
    ds.z[i] = z;
    ds.s[i] = s;
    ds.y[i] = dgp_mu(dgp, z, s, row) + rng.normal();
  }
  return ds;
}

TruthResult true_pce(const DgpSpec& dgp, std::int64_t draws, std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorKind::kInvalidArgument, "truth integration needs >= 2 draws");
  Rng rng(seed, 0);
  RatioAcc acc[3];
  Eigen::RowVectorXd row(kDgpCovariates);
  for (std::int64_t d = 0; d < draws; ++d) {
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double p1 = dgp_pz(dgp, 1, row);
    double p0 = dgp_pz(dgp, 0, row);
    double m11 = dgp_mu(dgp, 1, 1, row);
    double m10 = dgp_mu(dgp, 1, 0, row);
    double m01 = dgp_mu(dgp, 0, 1, row);
    double m00 = dgp_mu(dgp, 0, 0, row);
    acc[kS10].add((p1 - p0) * (m11 - m00), p1 - p0);
    acc[kS00].add((1.0 - p1) * (m10 - m00), 1.0 - p1);
    acc[kS11].add(p0 * (m11 - m01), p0);
  }
  TruthResult out;
  fill_truth(out, acc, "mean principal score");
  return out;
}

IdentificationCheck identification_forms(const DgpSpec& dgp, Eigen::Index draws,
                                         std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorKind::kInvalidArgument, "needs >= 2 draws");
  Rng rng(seed, 0);
  RatioAcc acc[3][3];
  Eigen::RowVectorXd row(kDgpCovariates);
  for (Eigen::Index d = 0; d < draws; ++d) {
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double pi = dgp_pi(dgp, row);
    double p1 = dgp_pz(dgp, 1, row);
    double p0 = dgp_pz(dgp, 0, row);
    int z = rng.bernoulli(pi) ? 1 : 0;
    int s = rng.bernoulli(z == 1 ? p1 : p0) ? 1 : 0;
    double y = dgp_mu(dgp, z, s, row) + rng.normal();

    double e10 = p1 - p0, e00 = 1.0 - p1, e11 = p0;
    double m11 = dgp_mu(dgp, 1, 1, row);
    double m10 = dgp_mu(dgp, 1, 0, row);
    double m01 = dgp_mu(dgp, 0, 1, row);
    double m00 = dgp_mu(dgp, 0, 0, row);
    double w1 = (z == 1 && s == 1) ? 1.0 / (p1 * pi) : 0.0;
    double w0 = (z == 0 && s == 0) ? 1.0 / ((1.0 - p0) * (1.0 - pi)) : 0.0;
    double t1 = z == 1 ? s / pi : 0.0;
    double t0 = z == 0 ? s / (1.0 - pi) : 0.0;
    double q1 = z == 1 ? (1.0 - s) / pi : 0.0;

    acc[0][kS10].add(e10 * w1 * y - e10 * w0 * y, e10);
    acc[0][kS00].add(q1 * y - e00 * w0 * y, e00);
    acc[0][kS11].add(e11 * w1 * y - t0 * y, e11);

    acc[1][kS10].add((t1 - t0) * (m11 - m00), e10);
    acc[1][kS00].add((1.0 - t1) * (m10 - m00), e00);
    acc[1][kS11].add(t0 * (m11 - m01), e11);

    acc[2][kS10].add(e10 * (m11 - m00), e10);
    acc[2][kS00].add(e00 * (m10 - m00), e00);
    acc[2][kS11].add(e11 * (m11 - m01), e11);
  }
  IdentificationCheck out;
  for (int f = 0; f < 3; ++f) {
    for (int u = 0; u < 3; ++u) {
      out.tau[static_cast<std::size_t>(f)][static_cast<std::size_t>(u)] = acc[f][u].tau();
      out.se[static_cast<std::size_t>(f)][static_cast<std::size_t>(u)] = acc[f][u].se();
    }
  }
  return out;
}

namespace {

struct TiltedPoint {
  double pi, p1, p0;
  double w1_10, w1_11, w0_10, w0_00;
  double m11, m10, m01, m00;
};

TiltedPoint tilted_at(const TiltedDgpSpec& dgp, const Eigen::RowVectorXd& x) {
  TiltedPoint pt;
  double a = signed_sum4(x, true);
  pt.pi = dgp.tp_correct ? 0.5 : expit(0.4 * plain_sum(x, 4, false));
  pt.p1 = expit(0.6 + 0.4 * a);
  pt.p0 = expit(-0.6 + 0.4 * a);
  double e10 = pt.p1 - pt.p0, e00 = 1.0 - pt.p1, e11 = pt.p0;
  double d1 = dgp.eps1 * e10 + e11;
  double d0 = dgp.eps0 * e10 + e00;
  pt.w1_10 = dgp.eps1 * (e10 + e11) / d1;
  pt.w1_11 = (e10 + e11) / d1;
  pt.w0_10 = dgp.eps0 * (e10 + e00) / d0;
  pt.w0_00 = (e10 + e00) / d0;
  double base = plain_sum(x, 5, true);
  pt.m11 = 3.0 / 4.0 * base;
  pt.m10 = 2.0 / 4.0 * base;
  pt.m01 = 2.0 / 4.0 * base;
  pt.m00 = 1.0 / 4.0 * base;
  return pt;
}

}  // namespace

Dataset generate_tilted(const TiltedDgpSpec& dgp, int replicate) {
  if (!(dgp.eps1 > 0.0) || !(dgp.eps0 > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "tilt factors must be positive");
  }
  Rng rng(dgp.seed, static_cast<std::uint64_t>(replicate) + 1);
  Eigen::Index n = dgp.n;
  Dataset ds;
  ds.z.resize(n);
  ds.s.resize(n);
  ds.y.resize(n);
  ds.x.resize(n, kDgpCovariates);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd row(kDgpCovariates);
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    ds.x.row(i) = row;
    TiltedPoint pt = tilted_at(dgp, row);
    int z = rng.bernoulli(pt.pi) ? 1 : 0;
    double e10 = pt.p1 - pt.p0, e00 = 1.0 - pt.p1;
    double u = rng.uniform();
    int stratum = u < e10 ? 0 : (u < e10 + e00 ? 1 : 2);
    int s = z == 1 ? (stratum != 1 ? 1 : 0) : (stratum == 2 ? 1 : 0);
    double mean;
    if (z == 1) {
      mean = stratum == 0 ? pt.w1_10 * pt.m11 : (stratum == 2 ? pt.w1_11 * pt.m11 : pt.m10);
    } else {
      mean = stratum == 0 ? pt.w0_10 * pt.m00 : (stratum == 1 ? pt.w0_00 * pt.m00 : pt.m01);
    }
    ds.z[i] = z;
    ds.s[i] = s;
    ds.y[i] = mean + rng.normal();
  }
  return ds;
}

TruthResult true_pce_tilted(const TiltedDgpSpec& dgp, std::int64_t draws,
                            std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorKind::kInvalidArgument, "truth integration needs >= 2 draws");
  Rng rng(seed, 0);
  RatioAcc acc[3];
  Eigen::RowVectorXd row(kDgpCovariates);
  for (std::int64_t d = 0; d < draws; ++d) {
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    TiltedPoint pt = tilted_at(dgp, row);
    double e10 = pt.p1 - pt.p0, e00 = 1.0 - pt.p1, e11 = pt.p0;
    acc[kS10].add(e10 * (pt.w1_10 * pt.m11 - pt.w0_10 * pt.m00), e10);
    acc[kS00].add(e00 * (pt.m10 - pt.w0_00 * pt.m00), e00);
    acc[kS11].add(e11 * (pt.w1_11 * pt.m11 - pt.m01), e11);
  }
  TruthResult out;
  fill_truth(out, acc, "mean principal score");
  return out;
}

double one_sided_p1(const Eigen::RowVectorXd& x) {
  return expit(0.3 + 0.5 * signed_sum4(x, true));
}

Dataset generate_one_sided(const OneSidedDgpSpec& dgp, int replicate) {
  Rng rng(dgp.seed, static_cast<std::uint64_t>(replicate) + 1);
  Eigen::Index n = dgp.n;
  Dataset ds;
  ds.z.resize(n);
  ds.s.resize(n);
  ds.y.resize(n);
  ds.x.resize(n, kDgpCovariates);
  DgpSpec mu_spec;  // outcome means from the correctly specified family
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd row(kDgpCovariates);
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    ds.x.row(i) = row;
    int z = rng.bernoulli(0.5) ? 1 : 0;
    int s = z == 1 && rng.bernoulli(one_sided_p1(row)) ? 1 : 0;
    ds.z[i] = z;
    ds.s[i] = s;
    ds.y[i] = dgp_mu(mu_spec, z, s, row) + rng.normal();
  }
  return ds;
}

TruthResult true_pce_one_sided(const OneSidedDgpSpec&, std::int64_t draws,
                               std::uint64_t seed) {
  if (draws < 2) throw Error(ErrorKind::kInvalidArgument, "truth integration needs >= 2 draws");
  Rng rng(seed, 0);
  RatioAcc acc10, acc00;
  DgpSpec mu_spec;
  Eigen::RowVectorXd row(kDgpCovariates);
  for (std::int64_t d = 0; d < draws; ++d) {
    for (int j = 0; j < 4; ++j) row[j] = 0.25 + rng.normal();
    row[4] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double p1 = one_sided_p1(row);
    double m11 = dgp_mu(mu_spec, 1, 1, row);
    double m10 = dgp_mu(mu_spec, 1, 0, row);
    double m00 = dgp_mu(mu_spec, 0, 0, row);
    acc10.add(p1 * (m11 - m00), p1);
    acc00.add((1.0 - p1) * (m10 - m00), 1.0 - p1);
  }
  TruthResult out;
  out.tau = {acc10.tau(), acc00.tau(), kNaN};
  out.se = {acc10.se(), acc00.se(), kNaN};
  return out;
}

std::string scenario_label(const DgpSpec& dgp) {
  auto tag = [](bool b) { return b ? "yes" : "no"; };
  return std::string("tp-") + tag(dgp.tp_correct) + "_ps-" + tag(dgp.ps_correct) + "_om-" +
         tag(dgp.om_correct);
}

std::array<std::array<double, 3>, 7> study_estimates(const Dataset& ds, const DgpSpec& dgp) {
  std::array<std::array<double, 3>, 7> out;
  for (auto& row : out) row = {kNaN, kNaN, kNaN};

  NuisanceFit nf;
  try {
    DesignSpec full;
    DesignSpec ps_spec;
    if (!dgp.ps_correct) ps_spec.covariate_indices = {0, 1};
    nf = fit_nuisance(ds, full, ps_spec, full, {});
  } catch (const Error&) {
    return out;
  }

  NuisanceFit flat = nf;
  flat.pi_x.setConstant(ds.z.cast<double>().mean());

  EstimatorOptions base;
  EstimatorOptions stab = base;
  stab.stabilized = true;
  EstimatorOptions plugin = base;
  plugin.marginal_mode = MarginalMode::kPlugin;

  auto run = [&](std::size_t col, auto&& fn) {
    try {
      out[col] = fn().tau;
    } catch (const Error&) {
    }
  };
  run(0, [&] { return estimate_tp_ps(ds, nf, base); });
  run(1, [&] { return estimate_tp_ps(ds, nf, stab); });
  run(2, [&] { return estimate_tp_ps(ds, flat, base); });
  run(3, [&] { return estimate_tp_om(ds, nf, base); });
  run(4, [&] { return estimate_ps_om(ds, nf, base); });
  run(5, [&] { return estimate_ps_om(ds, nf, plugin); });
  run(6, [&] { return estimate_triply_robust(ds, nf, base); });
  return out;
}

std::vector<DgpSpec> all_scenarios(Eigen::Index n, int reps, std::uint64_t seed) {
  std::vector<DgpSpec> out;
  for (bool tp : {true, false}) {
    for (bool ps : {true, false}) {
      for (bool om : {true, false}) {
        DgpSpec dgp;
        dgp.tp_correct = tp;
        dgp.ps_correct = ps;
        dgp.om_correct = om;
        dgp.n = n;
        dgp.reps = reps;
        dgp.seed = seed;
        out.push_back(dgp);
      }
    }
  }
  return out;
}

std::vector<ScenarioResult> run_study(const StudyConfig& config) {
  std::vector<ScenarioResult> results;
  results.reserve(config.scenarios.size());
  for (const DgpSpec& dgp : config.scenarios) {
    ScenarioResult sr;
    sr.dgp = dgp;
    sr.label = scenario_label(dgp);
    sr.truth = true_pce(dgp, config.oracle_draws, dgp.seed);
    sr.estimates.resize(static_cast<std::size_t>(dgp.reps));
    parallel_for(static_cast<std::size_t>(dgp.reps), config.threads, [&](std::size_t r) {
      Dataset ds = generate(dgp, static_cast<int>(r));
      sr.estimates[r] = study_estimates(ds, dgp);
    });
    for (const auto& rep : sr.estimates) {
      bool any_nan = false;
      for (const auto& est : rep) {
        for (double v : est) {
          if (!std::isfinite(v)) any_nan = true;
        }
      }
      if (any_nan) ++sr.n_failed;
    }
    results.push_back(std::move(sr));
  }
  return results;
}

std::string export_violin_data(const std::vector<ScenarioResult>& results) {
  std::string out = "scenario,estimator,stratum,rep,estimate,truth\n";
  for (const auto& sr : results) {
    for (std::size_t r = 0; r < sr.estimates.size(); ++r) {
      for (std::size_t q = 0; q < kStudyEstimators.size(); ++q) {
        for (std::size_t u = 0; u < 3; ++u) {
          out += sr.label;
          out += ',';
          out += kStudyEstimators[q];
          out += ',';
          out += kStratumLabel[u];
          out += ',';
          out += std::to_string(r);
          out += ',';
          out += format_double(sr.estimates[r][q][u]);
          out += ',';
          out += format_double(sr.truth.tau[u]);
          out += '\n';
        }
      }
    }
  }
  return out;
}

}  // namespace pce
