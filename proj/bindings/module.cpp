#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "pce/balance.hpp"
#include "pce/bootstrap.hpp"
#include "pce/sensitivity.hpp"
#include "pce/simulate.hpp"

namespace py = pybind11;

namespace {

pce::Dataset dataset_from_arrays(const Eigen::VectorXi& z, const Eigen::VectorXi& s,
                                 const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  return pce::make_dataset(z, s, y, x);
}

py::dict tau_dict(const std::array<double, 3>& v) {
  py::dict d;
  for (int u = 0; u < 3; ++u) d[pce::kStratumLabel[u]] = v[static_cast<std::size_t>(u)];
  return d;
}

py::dict estimate_dict(const pce::PceEstimate& est) {
  py::dict d;
  d["estimator"] = est.estimator;
  d["tau"] = tau_dict(est.tau);
  d["proportions"] = tau_dict(est.proportions);
  d["warnings"] = est.warnings;
  return d;
}

pce::DesignSpec spec_from(const std::optional<std::vector<int>>& cols) {
  pce::DesignSpec spec;
  if (cols) spec.covariate_indices = *cols;
  return spec;
}

pce::EstimatorOptions options_from(bool plugin_marginals, double trim) {
  pce::EstimatorOptions opt;
  if (plugin_marginals) opt.marginal_mode = pce::MarginalMode::kPlugin;
  opt.trim = trim;
  return opt;
}

pce::PceEstimate dispatch_family(const pce::Dataset& ds, const pce::NuisanceFit& nf,
                                 const std::string& family, pce::EstimatorOptions opt) {
  if (family == "tp-ps") return pce::estimate_tp_ps(ds, nf, opt);
  if (family == "tp-ps-stab") {
    opt.stabilized = true;
    return pce::estimate_tp_ps(ds, nf, opt);
  }
  if (family == "tp-om") return pce::estimate_tp_om(ds, nf, opt);
  if (family == "tp-om-stab") {
    opt.stabilized = true;
    return pce::estimate_tp_om(ds, nf, opt);
  }
  if (family == "ps-om") return pce::estimate_ps_om(ds, nf, opt);
  if (family == "triply-robust") return pce::estimate_triply_robust(ds, nf, opt);
  throw pce::Error(pce::ErrorKind::kInvalidArgument, "unknown estimator '" + family + "'");
}

pce::SensitivitySpec sens_spec(double eps1, double eps0,
                               const std::optional<Eigen::VectorXd>& eta1,
                               const std::optional<Eigen::VectorXd>& eta0) {
  pce::SensitivitySpec spec;
  spec.eps1 = eps1;
  spec.eps0 = eps0;
  spec.eta1 = eta1;
  spec.eta0 = eta0;
  return spec;
}

}  // namespace

PYBIND11_MODULE(pce, m) {
  m.doc() = "Causal effects within principal strata";

  py::register_exception<pce::Error>(m, "Error");

  py::class_<pce::Dataset>(m, "Dataset")
      .def(py::init(&dataset_from_arrays), py::arg("z"), py::arg("s"), py::arg("y"),
           py::arg("x"))
      .def_property_readonly("z", [](const pce::Dataset& d) { return d.z; })
      .def_property_readonly("s", [](const pce::Dataset& d) { return d.s; })
      .def_property_readonly("y", [](const pce::Dataset& d) { return d.y; })
      .def_property_readonly("x", [](const pce::Dataset& d) { return d.x; })
      .def_property_readonly("n", [](const pce::Dataset& d) { return d.n(); })
      .def_property_readonly("k", [](const pce::Dataset& d) { return d.k(); })
      .def_static("read_csv", &pce::read_csv_file, py::arg("path"))
      .def("write_csv", [](const pce::Dataset& d, const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
          throw pce::Error(pce::ErrorKind::kInvalidArgument, "cannot write '" + path + "'");
        }
        pce::write_csv(d, out);
      });

  m.def("validate", [](const pce::Dataset& ds) {
    pce::ValidationReport rep = pce::validate(ds);
    py::dict d;
    d["n"] = rep.n;
    d["k"] = rep.k;
    d["n_treated"] = rep.n_treated;
    d["cell_counts"] = rep.cell_count;
    d["strong_monotonicity_ok"] = rep.strong_monotonicity_ok;
    d["warnings"] = rep.warnings;
    return d;
  });

  py::class_<pce::NuisanceFit>(m, "NuisanceFit")
      .def_readonly("pi_x", &pce::NuisanceFit::pi_x)
      .def_readonly("p1_x", &pce::NuisanceFit::p1_x)
      .def_readonly("p0_x", &pce::NuisanceFit::p0_x)
      .def_property_readonly("mu_x",
                             [](const pce::NuisanceFit& nf) {
                               py::dict d;
                               d["00"] = nf.mu_x[0];
                               d["01"] = nf.mu_x[1];
                               d["10"] = nf.mu_x[2];
                               d["11"] = nf.mu_x[3];
                               return d;
                             })
      .def_readonly("strong_monotonicity", &pce::NuisanceFit::strong_monotonicity)
      .def_readonly("truncated", &pce::NuisanceFit::truncated)
      .def_readonly("warnings", &pce::NuisanceFit::warnings)
      .def("scores", [](const pce::NuisanceFit& nf) {
        pce::PrincipalScores sc = nf.scores();
        py::dict d;
        d["p1"] = sc.p1;
        d["p0"] = sc.p0;
        d["e10"] = sc.e10;
        d["e00"] = sc.e00;
        d["e11"] = sc.e11;
        d["warnings"] = sc.warnings;
        return d;
      });

  m.def(
      "fit_nuisance",
      [](const pce::Dataset& ds, const std::optional<std::vector<int>>& tp_cols,
         const std::optional<std::vector<int>>& ps_cols,
         const std::optional<std::vector<int>>& om_cols, bool randomized,
         bool strong_monotonicity, bool truncate) {
        pce::FitOptions fo;
        fo.randomized = randomized;
        fo.strong_monotonicity = strong_monotonicity;
        fo.truncate = truncate;
        return pce::fit_nuisance(ds, spec_from(tp_cols), spec_from(ps_cols),
                                 spec_from(om_cols), fo);
      },
      py::arg("ds"), py::arg("tp_cols") = py::none(), py::arg("ps_cols") = py::none(),
      py::arg("om_cols") = py::none(), py::arg("randomized") = false,
      py::arg("strong_monotonicity") = false, py::arg("truncate") = false);

  m.def(
      "estimate",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, const std::string& estimator,
         bool plugin_marginals, double trim) {
        return estimate_dict(
            dispatch_family(ds, nf, estimator, options_from(plugin_marginals, trim)));
      },
      py::arg("ds"), py::arg("nf"), py::arg("estimator") = "triply-robust",
      py::arg("plugin_marginals") = false, py::arg("trim") = 0.0);

  m.def(
      "estimate_all",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, bool plugin_marginals,
         double trim) {
        py::list out;
        for (const auto& fr :
             pce::estimate_all(ds, nf, options_from(plugin_marginals, trim))) {
          py::dict d;
          d["estimator"] = fr.estimator;
          if (fr.estimate) {
            d["estimate"] = estimate_dict(*fr.estimate);
          } else {
            d["error"] = fr.error;
          }
          out.append(d);
        }
        return out;
      },
      py::arg("ds"), py::arg("nf"), py::arg("plugin_marginals") = false,
      py::arg("trim") = 0.0);

  m.def(
      "compute_psi",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, double trim) {
        pce::PsiSet psi = pce::compute_psi(ds, nf, trim);
        py::dict d;
        d["s1"] = psi.s1;
        d["s0"] = psi.s0;
        d["one_minus_s1"] = psi.one_minus_s1;
        d["one_minus_s0"] = psi.one_minus_s0;
        d["y1s1"] = psi.y1s1;
        d["y0s0"] = psi.y0s0;
        d["y1_one_minus_s1"] = psi.y1_one_minus_s1;
        d["y0_one_minus_s0"] = psi.y0_one_minus_s0;
        return d;
      },
      py::arg("ds"), py::arg("nf"), py::arg("trim") = 0.0);

  m.def(
      "compute_phi",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, double trim) {
        pce::PsiSet psi = pce::compute_psi(ds, nf, trim);
        pce::PhiSet phi = pce::compute_phi(ds, nf, psi);
        py::dict d;
        d["phi1_10"] = phi.phi1_10;
        d["phi0_10"] = phi.phi0_10;
        d["phi1_00"] = phi.phi1_00;
        d["phi0_00"] = phi.phi0_00;
        d["phi1_11"] = phi.phi1_11;
        d["phi0_11"] = phi.phi0_11;
        return d;
      },
      py::arg("ds"), py::arg("nf"), py::arg("trim") = 0.0);

  m.def(
      "estimate_sensitivity",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, double eps1, double eps0,
         const std::optional<Eigen::VectorXd>& eta1, const std::optional<Eigen::VectorXd>& eta0,
         const std::string& method, double trim) {
        pce::SensitivitySpec spec = sens_spec(eps1, eps0, eta1, eta0);
        pce::EstimatorOptions opt = options_from(false, trim);
        return estimate_dict(method == "weighting"
                                 ? pce::estimate_sens_weighting(ds, nf, spec, opt)
                                 : pce::estimate_sens_dr(ds, nf, spec, opt));
      },
      py::arg("ds"), py::arg("nf"), py::arg("eps1") = 1.0, py::arg("eps0") = 1.0,
      py::arg("eta1") = py::none(), py::arg("eta0") = py::none(), py::arg("method") = "dr",
      py::arg("trim") = 0.0);

  m.def(
      "sensitivity_sweep",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf, const std::vector<double>& grid,
         const std::string& method, double trim) {
        std::vector<pce::SensitivitySpec> specs;
        for (double v : grid) {
          pce::SensitivitySpec spec;
          spec.eps1 = v;
          spec.eps0 = v;
          specs.push_back(spec);
        }
        auto rows = pce::sensitivity_sweep(
            ds, nf, specs,
            method == "weighting" ? pce::SensMethod::kWeighting
                                  : pce::SensMethod::kDoublyRobust,
            options_from(false, trim));
        py::list out;
        for (const auto& row : rows) {
          py::dict d;
          d["eps1"] = row.eps1_label;
          d["eps0"] = row.eps0_label;
          d["estimate"] = estimate_dict(row.estimate);
          out.append(d);
        }
        return out;
      },
      py::arg("ds"), py::arg("nf"), py::arg("grid"), py::arg("method") = "dr",
      py::arg("trim") = 0.0);

  m.def(
      "compute_omega",
      [](const pce::NuisanceFit& nf, const Eigen::MatrixXd& x, double eps1, double eps0,
         const std::optional<Eigen::VectorXd>& eta1,
         const std::optional<Eigen::VectorXd>& eta0) {
        pce::OmegaSet om = pce::compute_omega(nf.scores(), sens_spec(eps1, eps0, eta1, eta0), x);
        py::dict d;
        d["w1_10"] = om.w1_10;
        d["w0_10"] = om.w0_10;
        d["w0_00"] = om.w0_00;
        d["w1_11"] = om.w1_11;
        d["warnings"] = om.warnings;
        return d;
      },
      py::arg("nf"), py::arg("x"), py::arg("eps1") = 1.0, py::arg("eps0") = 1.0,
      py::arg("eta1") = py::none(), py::arg("eta0") = py::none());

  m.def(
      "balance_check",
      [](const pce::Dataset& ds, const pce::NuisanceFit& nf,
         const std::optional<std::vector<std::pair<Eigen::Index, bool>>>& terms,
         double threshold, double trim) {
        pce::BalanceOptions opt;
        opt.threshold = threshold;
        opt.trim = trim;
        if (terms) {
          for (const auto& [index, squared] : *terms) {
            std::string label = "x" + std::to_string(index + 1) + (squared ? "^2" : "");
            opt.terms.push_back({index, squared, label});
          }
        }
        pce::BalanceReport rep = pce::balance_check(ds, nf, opt);
        py::dict d;
        d["h"] = rep.h_labels;
        d["any_flagged"] = rep.any_flagged;
        d["warnings"] = rep.warnings;
        py::list strata;
        for (const auto& sb : rep.strata) {
          py::dict js;
          js["stratum"] = sb.stratum;
          js["flagged"] = sb.flagged;
          js["max_pairwise_stddiff"] = sb.max_pairwise_stddiff;
          py::list ws;
          for (const auto& wb : sb.weightings) {
            py::dict jw;
            jw["weighting"] = wb.weighting;
            jw["reference"] = wb.is_reference;
            jw["means"] = wb.means;
            jw["stddiff_vs_reference"] = wb.stddiff_vs_reference;
            ws.append(jw);
          }
          js["weightings"] = ws;
          strata.append(js);
        }
        d["strata"] = strata;
        return d;
      },
      py::arg("ds"), py::arg("nf"), py::arg("terms") = py::none(), py::arg("threshold") = 0.1,
      py::arg("trim") = 0.0);

  m.def(
      "bootstrap_estimate",
      [](const pce::Dataset& ds, const std::vector<std::string>& estimators, int replicates,
         double level, std::uint64_t seed, const std::string& ci, int threads,
         bool randomized, bool strong_monotonicity, bool truncate, bool plugin_marginals,
         double trim, double max_failure_rate) {
        pce::FitOptions fo;
        fo.randomized = randomized;
        fo.strong_monotonicity = strong_monotonicity;
        fo.truncate = truncate;
        pce::EstimatorOptions opt = options_from(plugin_marginals, trim);
        pce::Pipeline pipe = [fo, opt, estimators](const pce::Dataset& d) {
          pce::NuisanceFit f = pce::fit_nuisance(d, {}, {}, {}, fo);
          std::vector<pce::PceEstimate> v;
          for (const auto& family : estimators) {
            try {
              v.push_back(dispatch_family(d, f, family, opt));
            } catch (const pce::Error&) {
              pce::PceEstimate p;
              p.estimator = family;
              double nan = std::numeric_limits<double>::quiet_NaN();
              p.tau = {nan, nan, nan};
              v.push_back(std::move(p));
            }
          }
          return v;
        };
        pce::BootstrapConfig bc;
        bc.replicates = replicates;
        bc.level = level;
        bc.seed = seed;
        bc.method = ci == "normal" ? pce::CiMethod::kNormal : pce::CiMethod::kPercentile;
        bc.threads = threads;
        bc.max_failure_rate = max_failure_rate;
        pce::BootstrapResult res;
        {
          py::gil_scoped_release release;
          res = pce::bootstrap(ds, pipe, bc);
        }
        py::list out;
        for (const auto& be : res.estimates) {
          py::dict d;
          d["estimator"] = be.estimator;
          py::dict taus;
          for (int u = 0; u < 3; ++u) {
            const auto& ie = be.tau[static_cast<std::size_t>(u)];
            py::dict one;
            one["point"] = ie.point;
            one["lower"] = ie.lower;
            one["upper"] = ie.upper;
            one["se"] = ie.se;
            one["n_failed"] = ie.n_failed;
            taus[pce::kStratumLabel[u]] = one;
          }
          d["tau"] = taus;
          out.append(d);
        }
        py::dict wrap;
        wrap["estimates"] = out;
        wrap["replicates"] = res.replicates;
        wrap["level"] = res.level;
        wrap["warnings"] = res.warnings;
        return wrap;
      },
      py::arg("ds"), py::arg("estimators"), py::arg("replicates") = 1000,
      py::arg("level") = 0.95, py::arg("seed") = 0, py::arg("ci") = "percentile",
      py::arg("threads") = 1, py::arg("randomized") = false,
      py::arg("strong_monotonicity") = false, py::arg("truncate") = false,
      py::arg("plugin_marginals") = false, py::arg("trim") = 0.0,
      py::arg("max_failure_rate") = 0.2);

  py::class_<pce::DgpSpec>(m, "DgpSpec")
      .def(py::init([](bool tp, bool ps, bool om, Eigen::Index n, int reps,
                       std::uint64_t seed) {
             pce::DgpSpec d;
             d.tp_correct = tp;
             d.ps_correct = ps;
             d.om_correct = om;
             d.n = n;
             d.reps = reps;
             d.seed = seed;
             return d;
           }),
           py::arg("tp_correct") = true, py::arg("ps_correct") = true,
           py::arg("om_correct") = true, py::arg("n") = 500, py::arg("reps") = 1000,
           py::arg("seed") = 0)
      .def_readwrite("tp_correct", &pce::DgpSpec::tp_correct)
      .def_readwrite("ps_correct", &pce::DgpSpec::ps_correct)
      .def_readwrite("om_correct", &pce::DgpSpec::om_correct)
      .def_readwrite("n", &pce::DgpSpec::n)
      .def_readwrite("reps", &pce::DgpSpec::reps)
      .def_readwrite("seed", &pce::DgpSpec::seed);

  m.def("generate", &pce::generate, py::arg("dgp"), py::arg("replicate") = 0);
  m.def(
      "true_pce",
      [](const pce::DgpSpec& dgp, std::int64_t draws, std::uint64_t seed) {
        pce::TruthResult t = pce::true_pce(dgp, draws, seed);
        py::dict d;
        d["tau"] = tau_dict(t.tau);
        d["se"] = tau_dict(t.se);
        return d;
      },
      py::arg("dgp"), py::arg("draws") = 1000000, py::arg("seed") = 0);
  m.def("scenario_label", &pce::scenario_label, py::arg("dgp"));

  m.def(
      "run_study",
      [](const std::vector<pce::DgpSpec>& scenarios, std::int64_t oracle_draws, int threads) {
        pce::StudyConfig sc;
        sc.scenarios = scenarios;
        sc.oracle_draws = oracle_draws;
        sc.threads = threads;
        std::vector<pce::ScenarioResult> results;
        {
          py::gil_scoped_release release;
          results = pce::run_study(sc);
        }
        py::dict wrap;
        py::list out;
        for (const auto& sr : results) {
          py::dict d;
          d["label"] = sr.label;
          d["truth"] = tau_dict(sr.truth.tau);
          d["truth_se"] = tau_dict(sr.truth.se);
          d["estimators"] = pce::kStudyEstimators;
          d["n_failed"] = sr.n_failed;
          py::list reps;
          for (const auto& rep : sr.estimates) reps.append(rep);
          d["estimates"] = reps;
          out.append(d);
        }
        wrap["results"] = out;
        wrap["csv"] = pce::export_violin_data(results);
        return wrap;
      },
      py::arg("scenarios"), py::arg("oracle_draws") = 1000000, py::arg("threads") = 1);

  m.def("all_scenarios", &pce::all_scenarios, py::arg("n"), py::arg("reps"), py::arg("seed"));
}
