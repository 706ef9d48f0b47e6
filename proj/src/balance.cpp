#include "pce/balance.hpp"

#include <cmath>
#include <limits>

namespace pce {

namespace {

Eigen::VectorXd h_column(const Dataset& ds, const HTerm& term) {
  if (term.index < 0 || term.index >= ds.k()) {
    throw Error(ErrorKind::kInvalidArgument,
                "balance function index " + std::to_string(term.index) + " out of range for " +
                    std::to_string(ds.k()) + " covariates");
  }
  Eigen::VectorXd col = ds.x.col(term.index);
  if (term.squared) col = col.array().square();
  return col;
}

double sample_sd(const Eigen::VectorXd& v) {
  Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  double mean = v.mean();
  double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double standardized(double diff, double sd) {
  if (sd == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / sd;
}

struct Scheme {
  std::string name;
  bool is_reference = false;
  Eigen::VectorXd w;
};

double weighted_mean(const Eigen::VectorXd& w, const Eigen::VectorXd& h,
                     const std::string& stratum, const std::string& scheme) {
  double sw = w.sum();
  if (!(sw > 0.0)) {
    throw Error(ErrorKind::kDegenerateStratum, "stratum " + stratum + ", weighting " + scheme +
                                                   ": weight sum = " + format_double(sw));
  }
  return w.dot(h) / sw;
}

}  // namespace

BalanceReport balance_check(const Dataset& ds, const NuisanceFit& nf,
                            const BalanceOptions& options) {
  Eigen::Index n = ds.n();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "dataset has no rows");
  if (nf.pi_x.size() != n || nf.p1_x.size() != n || nf.p0_x.size() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "nuisance fit covers " + std::to_string(nf.pi_x.size()) + " units, dataset has " +
                    std::to_string(n));
  }

  std::vector<HTerm> terms = options.terms;
  if (terms.empty()) {
    for (Eigen::Index j = 0; j < ds.k(); ++j) {
      std::string base = "x" + std::to_string(j + 1);
      terms.push_back({j, false, base});
      terms.push_back({j, true, base + "^2"});
    }
  }

  BalanceReport report;
  PrincipalScores scores = strata_from_scores(nf.p1_x, nf.p0_x);
  report.warnings = scores.warnings;

  Eigen::VectorXd pi = nf.pi_x;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (options.trim > 0.0) {
      if (pi[i] < options.trim) pi[i] = options.trim;
      if (pi[i] > 1.0 - options.trim) pi[i] = 1.0 - options.trim;
    }
    if (!(pi[i] > 0.0 && pi[i] < 1.0)) {
      throw Error(ErrorKind::kPositivityViolation,
                  "unit " + std::to_string(i + 1) + ": pi(x) = " + format_double(pi[i]));
    }
  }

  Eigen::VectorXd zi = ds.z.cast<double>();
  Eigen::VectorXd si = ds.s.cast<double>();
  Eigen::VectorXd inv1 = zi.array() / pi.array();
  Eigen::VectorXd inv0 = (1.0 - zi.array()) / (1.0 - pi.array());
  Eigen::VectorXd r_p1(n), r_1mp0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Indicator-bearing ratios vanish with the indicator when the fitted
    // denominator is 0, so a guarded 0 keeps the products finite.
    r_p1[i] = nf.p1_x[i] > 0.0 ? 1.0 / nf.p1_x[i] : 0.0;
    r_1mp0[i] = nf.p0_x[i] < 1.0 ? 1.0 / (1.0 - nf.p0_x[i]) : 0.0;
  }

  std::vector<Eigen::VectorXd> h_cols;
  std::vector<double> h_sds;
  for (const auto& term : terms) {
    report.h_labels.push_back(term.label);
    h_cols.push_back(h_column(ds, term));
    h_sds.push_back(sample_sd(h_cols.back()));
  }

  auto make_stratum = [&](const std::string& label, std::vector<Scheme> schemes) {
    StratumBalance sb;
    sb.stratum = label;
    std::vector<std::vector<double>> means(schemes.size());
    std::size_t ref = 0;
    for (std::size_t q = 0; q < schemes.size(); ++q) {
      if (schemes[q].is_reference) ref = q;
    }
    sb.max_pairwise_stddiff.assign(terms.size(), 0.0);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      for (std::size_t q = 0; q < schemes.size(); ++q) {
        means[q].push_back(weighted_mean(schemes[q].w, h_cols[t], label, schemes[q].name));
      }
      double worst = 0.0;
      for (std::size_t a = 0; a + 1 < schemes.size(); ++a) {
        for (std::size_t b = a + 1; b < schemes.size(); ++b) {
          double gap = std::abs(standardized(means[a][t] - means[b][t], h_sds[t]));
          if (gap > worst) worst = gap;
        }
      }
      sb.max_pairwise_stddiff[t] = worst;
      if (worst > options.threshold) sb.flagged = true;
    }
    for (std::size_t q = 0; q < schemes.size(); ++q) {
      WeightingBalance wb;
      wb.weighting = schemes[q].name;
      wb.is_reference = schemes[q].is_reference;
      wb.means = means[q];
      for (std::size_t t = 0; t < terms.size(); ++t) {
        wb.stddiff_vs_reference.push_back(standardized(means[q][t] - means[ref][t], h_sds[t]));
      }
      sb.weightings.push_back(std::move(wb));
    }
    return sb;
  };

  Eigen::ArrayXd e10 = scores.e10.array();
  Eigen::ArrayXd e00 = scores.e00.array();
  Eigen::ArrayXd e11 = scores.e11.array();

  {
    std::vector<Scheme> schemes;
    schemes.push_back({"arm1", false,
                       (e10 * si.array() * inv1.array() * r_p1.array()).matrix()});
    schemes.push_back({"arm0", false,
                       (e10 * (1.0 - si.array()) * inv0.array() * r_1mp0.array()).matrix()});
    schemes.push_back({"no-score", true,
                       (si.array() * inv1.array() - si.array() * inv0.array()).matrix()});
    schemes.push_back({"score", false, e10.matrix()});
    report.strata.push_back(make_stratum("10", std::move(schemes)));
  }
  {
    std::vector<Scheme> schemes;
    schemes.push_back({"arm1", false, ((1.0 - si.array()) * inv1.array()).matrix()});
    schemes.push_back({"arm0", false,
                       (e00 * (1.0 - si.array()) * inv0.array() * r_1mp0.array()).matrix()});
    schemes.push_back({"no-score", true, (1.0 - si.array() * inv1.array()).matrix()});
    schemes.push_back({"score", false, e00.matrix()});
    report.strata.push_back(make_stratum("00", std::move(schemes)));
  }
  if (nf.strong_monotonicity) {
    report.warnings.push_back(
        "stratum 11 weighting comparison skipped under strong monotonicity");
  } else {
    std::vector<Scheme> schemes;
    schemes.push_back({"arm1", false,
                       (e11 * si.array() * inv1.array() * r_p1.array()).matrix()});
    schemes.push_back({"no-score", true, (si.array() * inv0.array()).matrix()});
    schemes.push_back({"score", false, e11.matrix()});
    report.strata.push_back(make_stratum("11", std::move(schemes)));
  }

  for (const auto& sb : report.strata) {
    if (sb.flagged) report.any_flagged = true;
  }
  return report;
}

}  // namespace pce
