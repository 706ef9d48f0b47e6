#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pce/balance.hpp"
#include "pce/bootstrap.hpp"
#include "pce/sensitivity.hpp"
#include "pce/simulate.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct IoConfig {
  std::string input;
  std::string z_name = "z";
  std::string s_name = "s";
  std::string y_name = "y";
  std::vector<std::string> x_names;
  bool randomized = false;
  bool strong = false;
  bool truncate = false;
  double trim = 0.0;
  std::string out;
  std::string format = "json";
  int threads = 1;
  std::uint64_t seed = 0;
};

void add_io_flags(CLI::App* sub, IoConfig& cfg) {
  sub->add_option("--input", cfg.input, "Input CSV file")->required();
  sub->add_option("--z", cfg.z_name, "Treatment column name");
  sub->add_option("--s", cfg.s_name, "Intermediate column name");
  sub->add_option("--y", cfg.y_name, "Outcome column name");
  sub->add_option("--x", cfg.x_names, "Covariate column names (default: all remaining)")
      ->delimiter(',');
  sub->add_flag("--randomized", cfg.randomized,
                "Treat assignment as randomized: constant treatment probability");
  sub->add_flag("--strong-monotonicity", cfg.strong,
                "Assume the intermediate is 0 for every control unit");
  sub->add_flag("--truncate-scores", cfg.truncate,
                "Clamp negative fitted e10(x) to 0 and renormalize");
  sub->add_option("--trim", cfg.trim, "Clamp fitted treatment probabilities to [t, 1-t]")
      ->check(CLI::Range(0.0, 0.5));
  sub->add_option("--out", cfg.out, "Write output to this file instead of stdout");
  sub->add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "table"}));
  sub->add_option("--threads", cfg.threads, "Worker threads; never changes results")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "Seed for any randomized computation");
}

struct LoadedData {
  pce::Dataset ds;
  std::vector<std::string> x_names;
};

LoadedData load_data(const IoConfig& cfg) {
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) {
    throw pce::Error(pce::ErrorKind::kParseError, "cannot open '" + cfg.input + "'");
  }
  pce::Table table = pce::read_table(in);
  LoadedData out;
  out.ds = pce::dataset_from_table(table, cfg.z_name, cfg.s_name, cfg.y_name, cfg.x_names);
  if (cfg.x_names.empty()) {
    for (const auto& name : table.columns) {
      if (name != cfg.z_name && name != cfg.s_name && name != cfg.y_name) {
        out.x_names.push_back(name);
      }
    }
  } else {
    out.x_names = cfg.x_names;
  }
  return out;
}

pce::NuisanceFit fit_for(const pce::Dataset& ds, const IoConfig& cfg) {
  pce::FitOptions fo;
  fo.randomized = cfg.randomized;
  fo.strong_monotonicity = cfg.strong;
  fo.truncate = cfg.truncate;
  return pce::fit_nuisance(ds, {}, {}, {}, fo);
}

void emit(const IoConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) {
    throw pce::Error(pce::ErrorKind::kInvalidArgument, "cannot write '" + cfg.out + "'");
  }
  out << text;
}

std::string fmt_cell(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

json tau_json(const std::array<double, 3>& tau) {
  json j;
  for (int u = 0; u < 3; ++u) {
    j[pce::kStratumLabel[u]] = tau[static_cast<std::size_t>(u)];
  }
  return j;
}

// ---- estimate ----------------------------------------------------------

struct EstimateConfig {
  IoConfig io;
  std::vector<std::string> estimators = {"all"};
  int bootstrap = 0;
  std::string ci = "percentile";
  double level = 0.95;
};

pce::PceEstimate run_family(const pce::Dataset& ds, const pce::NuisanceFit& nf,
                            const std::string& family, const pce::EstimatorOptions& base) {
  pce::EstimatorOptions opt = base;
  if (family == "tp-ps") {
    opt.stabilized = false;
    return pce::estimate_tp_ps(ds, nf, opt);
  }
  if (family == "tp-ps-stab") {
    opt.stabilized = true;
    return pce::estimate_tp_ps(ds, nf, opt);
  }
  if (family == "tp-om") {
    opt.stabilized = false;
    return pce::estimate_tp_om(ds, nf, opt);
  }
  if (family == "ps-om") return pce::estimate_ps_om(ds, nf, opt);
  if (family == "triply-robust") return pce::estimate_triply_robust(ds, nf, opt);
  throw pce::Error(pce::ErrorKind::kInvalidArgument, "unknown estimator '" + family + "'");
}

std::vector<std::string> resolve_families(const std::vector<std::string>& requested) {
  std::vector<std::string> out;
  for (const auto& name : requested) {
    if (name == "all") {
      for (const char* f : pce::kEstimatorFamilies) out.push_back(f);
    } else {
      bool known = false;
      for (const char* f : pce::kEstimatorFamilies) {
        if (name == f) known = true;
      }
      if (!known) {
        throw pce::Error(pce::ErrorKind::kInvalidArgument, "unknown estimator '" + name + "'");
      }
      out.push_back(name);
    }
  }
  return out;
}

int cmd_estimate(const EstimateConfig& cfg) {
  LoadedData data = load_data(cfg.io);
  pce::NuisanceFit nf = fit_for(data.ds, cfg.io);
  std::vector<std::string> families = resolve_families(cfg.estimators);

  pce::EstimatorOptions opt;
  opt.trim = cfg.io.trim;

  pce::PrincipalScores scores = nf.scores();
  Eigen::VectorXd pi = nf.pi_x;
  pce::MarginalProportions mp = pce::marginal_proportions(
      scores, pce::MarginalMode::kDoublyRobust, pi, data.ds.z, data.ds.s);

  struct Row {
    std::string family;
    std::optional<pce::PceEstimate> est;
    std::string error;
  };
  std::vector<Row> rows;
  for (const auto& family : families) {
    Row row;
    row.family = family;
    try {
      row.est = run_family(data.ds, nf, family, opt);
    } catch (const pce::Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  bool any_ok = false;
  for (const auto& row : rows) {
    if (row.est) any_ok = true;
  }
  if (!any_ok) {
    throw pce::Error(pce::ErrorKind::kDegenerateStratum,
                     "every requested estimator failed; first error: " + rows.front().error);
  }

  std::optional<pce::BootstrapResult> boot;
  if (cfg.bootstrap > 0) {
    pce::BootstrapConfig bc;
    bc.replicates = cfg.bootstrap;
    bc.level = cfg.level;
    bc.seed = cfg.io.seed;
    bc.method = cfg.ci == "normal" ? pce::CiMethod::kNormal : pce::CiMethod::kPercentile;
    bc.threads = cfg.io.threads;
    IoConfig io = cfg.io;
    pce::EstimatorOptions bopt = opt;
    std::vector<std::string> bfam = families;
    pce::Pipeline pipe = [io, bopt, bfam](const pce::Dataset& d) {
      pce::NuisanceFit f = fit_for(d, io);
      std::vector<pce::PceEstimate> v;
      for (const auto& family : bfam) {
        try {
          v.push_back(run_family(d, f, family, bopt));
        } catch (const pce::Error&) {
          pce::PceEstimate p;
          p.estimator = family;
          p.tau = {kNaN, kNaN, kNaN};
          v.push_back(std::move(p));
        }
      }
      return v;
    };
    boot = pce::bootstrap(data.ds, pipe, bc);
  }

  for (const auto& row : rows) {
    if (!row.error.empty()) {
      std::cerr << row.family << ": " << row.error << "\n";
    }
  }

  if (cfg.io.format == "json") {
    json j;
    j["command"] = "estimate";
    j["n"] = data.ds.n();
    j["k"] = data.ds.k();
    j["proportions"] = tau_json({mp.e10, mp.e00, mp.e11});
    j["estimators"] = json::array();
    for (std::size_t q = 0; q < rows.size(); ++q) {
      json je;
      je["estimator"] = rows[q].family;
      if (rows[q].est) {
        je["tau"] = tau_json(rows[q].est->tau);
        je["proportions"] = tau_json(rows[q].est->proportions);
        if (boot) {
          json ji;
          for (int u = 0; u < 3; ++u) {
            const auto& ie = boot->estimates[q].tau[static_cast<std::size_t>(u)];
            json one;
            one["lower"] = ie.lower;
            one["upper"] = ie.upper;
            one["se"] = ie.se;
            one["n_failed"] = ie.n_failed;
            ji[pce::kStratumLabel[u]] = one;
          }
          je["interval"] = ji;
        }
        if (!rows[q].est->warnings.empty()) je["warnings"] = rows[q].est->warnings;
      } else {
        je["error"] = rows[q].error;
      }
      j["estimators"].push_back(je);
    }
    if (boot) {
      json jb;
      jb["replicates"] = boot->replicates;
      jb["level"] = boot->level;
      jb["method"] = cfg.ci;
      j["bootstrap"] = jb;
      if (!boot->warnings.empty()) j["bootstrap_warnings"] = boot->warnings;
    }
    if (!nf.warnings.empty()) j["warnings"] = nf.warnings;
    emit(cfg.io, j.dump(2) + "\n");
    return 0;
  }

  if (cfg.io.format == "csv") {
    std::string out = "estimator,stratum,estimate,lower,upper,se,n_failed\n";
    std::array<double, 3> props = {mp.e10, mp.e00, mp.e11};
    for (int u = 0; u < 3; ++u) {
      out += std::string("proportions,") + pce::kStratumLabel[u] + "," +
             pce::format_double(props[static_cast<std::size_t>(u)]) + ",,,,\n";
    }
    for (std::size_t q = 0; q < rows.size(); ++q) {
      for (int u = 0; u < 3; ++u) {
        auto su = static_cast<std::size_t>(u);
        out += rows[q].family;
        out += ',';
        out += pce::kStratumLabel[u];
        out += ',';
        out += rows[q].est ? pce::format_double(rows[q].est->tau[su]) : "nan";
        if (boot && rows[q].est) {
          const auto& ie = boot->estimates[q].tau[su];
          out += "," + pce::format_double(ie.lower) + "," + pce::format_double(ie.upper) +
                 "," + pce::format_double(ie.se) + "," + std::to_string(ie.n_failed);
        } else {
          out += ",,,,";
        }
        out += '\n';
      }
    }
    emit(cfg.io, out);
    return 0;
  }

  // table
  std::string out;
  out += "n=" + std::to_string(data.ds.n()) + " k=" + std::to_string(data.ds.k()) + "\n";
  out += "proportions: 10=" + fmt_cell(mp.e10) + " 00=" + fmt_cell(mp.e00) +
         " 11=" + fmt_cell(mp.e11) + "\n\n";
  out += pad("estimator", 16) + pad("tau_10", 26) + pad("tau_00", 26) + "tau_11\n";
  for (std::size_t q = 0; q < rows.size(); ++q) {
    out += pad(rows[q].family, 16);
    for (int u = 0; u < 3; ++u) {
      auto su = static_cast<std::size_t>(u);
      std::string cell;
      if (rows[q].est) {
        cell = fmt_cell(rows[q].est->tau[su]);
        if (boot) {
          const auto& ie = boot->estimates[q].tau[su];
          cell += " (" + fmt_cell(ie.lower) + ", " + fmt_cell(ie.upper) + ")";
        }
      } else {
        cell = "error";
      }
      out += u < 2 ? pad(cell, 26) : cell;
    }
    out += '\n';
  }
  for (const auto& w : nf.warnings) out += "warning: " + w + "\n";
  emit(cfg.io, out);
  return 0;
}

// ---- sensitivity -------------------------------------------------------

struct SensitivityConfig {
  IoConfig io;
  double eps1 = 1.0;
  double eps0 = 1.0;
  std::vector<double> eta1;
  std::vector<double> eta0;
  std::vector<double> grid;
  bool point_given = false;
};

int cmd_sensitivity(const SensitivityConfig& cfg) {
  LoadedData data = load_data(cfg.io);
  pce::NuisanceFit nf = fit_for(data.ds, cfg.io);

  std::vector<pce::SensitivitySpec> specs;
  if (!cfg.grid.empty()) {
    for (double v : cfg.grid) {
      pce::SensitivitySpec spec;
      spec.eps1 = v;
      spec.eps0 = v;
      specs.push_back(spec);
    }
  } else if (cfg.point_given) {
    pce::SensitivitySpec spec;
    spec.eps1 = cfg.eps1;
    spec.eps0 = cfg.eps0;
    if (!cfg.eta1.empty()) {
      spec.eta1 = Eigen::Map<const Eigen::VectorXd>(cfg.eta1.data(),
                                                    static_cast<Eigen::Index>(cfg.eta1.size()));
    }
    if (!cfg.eta0.empty()) {
      spec.eta0 = Eigen::Map<const Eigen::VectorXd>(cfg.eta0.data(),
                                                    static_cast<Eigen::Index>(cfg.eta0.size()));
    }
    specs.push_back(spec);
  } else {
    for (double v : pce::kDefaultEpsGrid) {
      pce::SensitivitySpec spec;
      spec.eps1 = v;
      spec.eps0 = v;
      specs.push_back(spec);
    }
  }

  pce::EstimatorOptions opt;
  opt.trim = cfg.io.trim;
  std::vector<pce::SweepRow> rows =
      pce::sensitivity_sweep(data.ds, nf, specs, pce::SensMethod::kDoublyRobust, opt);

  bool any_ok = false;
  for (const auto& row : rows) {
    for (double v : row.estimate.tau) {
      if (std::isfinite(v)) any_ok = true;
    }
    for (const auto& w : row.estimate.warnings) {
      std::cerr << "eps1=" << row.eps1_label << " eps0=" << row.eps0_label << ": " << w << "\n";
    }
  }
  if (!any_ok && !rows.empty() && !nf.strong_monotonicity) {
    throw pce::Error(pce::ErrorKind::kDegenerateStratum,
                     "every sensitivity row failed; see warnings");
  }

  if (cfg.io.format == "json") {
    json j;
    j["command"] = "sensitivity";
    j["method"] = "dr";
    j["rows"] = json::array();
    for (const auto& row : rows) {
      json jr;
      jr["eps1"] = row.eps1_label;
      jr["eps0"] = row.eps0_label;
      jr["tau"] = tau_json(row.estimate.tau);
      jr["proportions"] = tau_json(row.estimate.proportions);
      if (!row.estimate.warnings.empty()) jr["warnings"] = row.estimate.warnings;
      j["rows"].push_back(jr);
    }
    if (!nf.warnings.empty()) j["warnings"] = nf.warnings;
    emit(cfg.io, j.dump(2) + "\n");
    return 0;
  }

  if (cfg.io.format == "csv") {
    std::string out = "eps1,eps0,tau_10,tau_00,tau_11\n";
    for (const auto& row : rows) {
      out += row.eps1_label + "," + row.eps0_label;
      for (int u = 0; u < 3; ++u) {
        out += "," + pce::format_double(row.estimate.tau[static_cast<std::size_t>(u)]);
      }
      out += '\n';
    }
    emit(cfg.io, out);
    return 0;
  }

  std::string out = pad("eps1", 10) + pad("eps0", 10) + pad("tau_10", 12) + pad("tau_00", 12) +
                    "tau_11\n";
  for (const auto& row : rows) {
    out += pad(row.eps1_label, 10) + pad(row.eps0_label, 10);
    out += pad(fmt_cell(row.estimate.tau[0]), 12) + pad(fmt_cell(row.estimate.tau[1]), 12) +
           fmt_cell(row.estimate.tau[2]) + "\n";
  }
  emit(cfg.io, out);
  return 0;
}

// ---- balance -----------------------------------------------------------

struct BalanceConfig {
  IoConfig io;
  std::vector<std::string> h;
  double threshold = 0.1;
};

int cmd_balance(const BalanceConfig& cfg) {
  LoadedData data = load_data(cfg.io);
  pce::NuisanceFit nf = fit_for(data.ds, cfg.io);

  pce::BalanceOptions opt;
  opt.threshold = cfg.threshold;
  opt.trim = cfg.io.trim;
  for (const auto& token : cfg.h) {
    pce::HTerm term;
    term.label = token;
    std::string base = token;
    if (base.size() > 2 && base.substr(base.size() - 2) == "^2") {
      term.squared = true;
      base = base.substr(0, base.size() - 2);
    }
    bool found = false;
    for (std::size_t j = 0; j < data.x_names.size(); ++j) {
      if (data.x_names[j] == base) {
        term.index = static_cast<Eigen::Index>(j);
        found = true;
        break;
      }
    }
    if (!found) {
      throw pce::Error(pce::ErrorKind::kInvalidArgument,
                       "no covariate named '" + base + "' for balance function '" + token + "'");
    }
    opt.terms.push_back(std::move(term));
  }
  if (opt.terms.empty()) {
    for (std::size_t j = 0; j < data.x_names.size(); ++j) {
      opt.terms.push_back({static_cast<Eigen::Index>(j), false, data.x_names[j]});
      opt.terms.push_back({static_cast<Eigen::Index>(j), true, data.x_names[j] + "^2"});
    }
  }

  pce::BalanceReport report = pce::balance_check(data.ds, nf, opt);

  if (cfg.io.format == "json") {
    json j;
    j["command"] = "balance";
    j["h"] = report.h_labels;
    j["threshold"] = cfg.threshold;
    j["strata"] = json::array();
    for (const auto& sb : report.strata) {
      json js;
      js["stratum"] = sb.stratum;
      js["flagged"] = sb.flagged;
      js["max_pairwise_stddiff"] = sb.max_pairwise_stddiff;
      js["weightings"] = json::array();
      for (const auto& wb : sb.weightings) {
        json jw;
        jw["weighting"] = wb.weighting;
        jw["reference"] = wb.is_reference;
        jw["means"] = wb.means;
        jw["stddiff_vs_reference"] = wb.stddiff_vs_reference;
        js["weightings"].push_back(jw);
      }
      j["strata"].push_back(js);
    }
    j["any_flagged"] = report.any_flagged;
    if (!report.warnings.empty()) j["warnings"] = report.warnings;
    if (!nf.warnings.empty()) j["fit_warnings"] = nf.warnings;
    emit(cfg.io, j.dump(2) + "\n");
    return 0;
  }

  if (cfg.io.format == "csv") {
    std::string out =
        "stratum,h,weighting,reference,weighted_mean,stddiff_vs_reference,"
        "max_pairwise_stddiff,flagged\n";
    for (const auto& sb : report.strata) {
      for (std::size_t t = 0; t < report.h_labels.size(); ++t) {
        for (const auto& wb : sb.weightings) {
          out += sb.stratum + "," + report.h_labels[t] + "," + wb.weighting + ",";
          out += wb.is_reference ? "1" : "0";
          out += "," + pce::format_double(wb.means[t]) + "," +
                 pce::format_double(wb.stddiff_vs_reference[t]) + "," +
                 pce::format_double(sb.max_pairwise_stddiff[t]) + ",";
          out += sb.flagged ? "1" : "0";
          out += '\n';
        }
      }
    }
    emit(cfg.io, out);
    return 0;
  }

  std::string out;
  for (const auto& sb : report.strata) {
    out += "stratum " + sb.stratum + (sb.flagged ? " [imbalance flagged]" : "") + "\n";
    out += "  " + pad("h", 12);
    for (const auto& wb : sb.weightings) {
      out += pad(wb.weighting + (wb.is_reference ? "*" : ""), 12);
    }
    out += "max|stddiff|\n";
    for (std::size_t t = 0; t < report.h_labels.size(); ++t) {
      out += "  " + pad(report.h_labels[t], 12);
      for (const auto& wb : sb.weightings) {
        out += pad(fmt_cell(wb.means[t]), 12);
      }
      out += fmt_cell(sb.max_pairwise_stddiff[t]) + "\n";
    }
    out += '\n';
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  emit(cfg.io, out);
  return 0;
}

// ---- simulate ----------------------------------------------------------

struct SimulateConfig {
  IoConfig io;
  std::string scenario = "all";
  Eigen::Index n = 500;
  int reps = 1000;
};

bool parse_flag_word(const std::string& word, const std::string& where) {
  if (word == "yes") return true;
  if (word == "no") return false;
  throw pce::Error(pce::ErrorKind::kInvalidArgument,
                   "scenario component '" + word + "' in '" + where + "' must be yes or no");
}

int cmd_simulate(const SimulateConfig& cfg) {
  pce::StudyConfig sc;
  sc.threads = cfg.io.threads;
  if (cfg.scenario == "all") {
    sc.scenarios = pce::all_scenarios(cfg.n, cfg.reps, cfg.io.seed);
  } else {
    std::vector<std::string> words;
    std::string cur;
    for (char c : cfg.scenario) {
      if (c == ',') {
        words.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    words.push_back(cur);
    if (words.size() != 3) {
      throw pce::Error(pce::ErrorKind::kInvalidArgument,
                       "scenario must be 'all' or three yes/no words, got '" + cfg.scenario +
                           "'");
    }
    pce::DgpSpec dgp;
    dgp.tp_correct = parse_flag_word(words[0], cfg.scenario);
    dgp.ps_correct = parse_flag_word(words[1], cfg.scenario);
    dgp.om_correct = parse_flag_word(words[2], cfg.scenario);
    dgp.n = cfg.n;
    dgp.reps = cfg.reps;
    dgp.seed = cfg.io.seed;
    sc.scenarios = {dgp};
  }
  std::vector<pce::ScenarioResult> results = pce::run_study(sc);
  for (const auto& sr : results) {
    if (sr.n_failed > 0) {
      std::cerr << sr.label << ": " << sr.n_failed << " of " << sr.estimates.size()
                << " replicates had at least one failed estimate\n";
    }
  }
  emit(cfg.io, pce::export_violin_data(results));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal stratification effect estimation"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);

  EstimateConfig ecfg;
  CLI::App* est = app.add_subcommand("estimate", "Estimate effects within principal strata");
  add_io_flags(est, ecfg.io);
  est->add_option("--estimators", ecfg.estimators,
                  "Comma list of estimator families, or 'all'")
      ->delimiter(',');
  est->add_option("--bootstrap", ecfg.bootstrap, "Bootstrap replicates (0 disables)")
      ->check(CLI::NonNegativeNumber);
  est->add_option("--ci", ecfg.ci, "Interval method")
      ->check(CLI::IsMember({"percentile", "normal"}));
  est->add_option("--level", ecfg.level, "Confidence level")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));

  SensitivityConfig scfg;
  CLI::App* sens = app.add_subcommand(
      "sensitivity", "Sweep estimates over departures from within-arm comparability");
  add_io_flags(sens, scfg.io);
  CLI::Option* oe1 = sens->add_option("--eps1", scfg.eps1, "Constant ratio, treated arm");
  CLI::Option* oe0 = sens->add_option("--eps0", scfg.eps0, "Constant ratio, control arm");
  CLI::Option* on1 = sens->add_option("--eta1", scfg.eta1,
                                      "Log-linear ratio coefficients, treated arm")
                         ->delimiter(',');
  CLI::Option* on0 = sens->add_option("--eta0", scfg.eta0,
                                      "Log-linear ratio coefficients, control arm")
                         ->delimiter(',');
  sens->add_option("--grid", scfg.grid, "Comma list of constant ratios applied to both arms")
      ->delimiter(',');

  BalanceConfig bcfg;
  CLI::App* bal = app.add_subcommand("balance", "Compare weighted covariate means");
  bal->set_help_flag("--help", "Print this help message and exit");
  add_io_flags(bal, bcfg.io);
  bal->add_option("--h", bcfg.h, "Balance functions: column names and name^2 tokens")
      ->delimiter(',');
  bal->add_option("--threshold", bcfg.threshold, "Standardized difference flag threshold")
      ->check(CLI::NonNegativeNumber);

  SimulateConfig mcfg;
  CLI::App* sim = app.add_subcommand("simulate", "Run the synthetic estimator study");
  sim->add_option("--scenario", mcfg.scenario,
                  "'all' or tp,ps,om correctness as yes/no words");
  sim->add_option("--n", mcfg.n, "Sample size per replicate")->check(CLI::PositiveNumber);
  sim->add_option("--reps", mcfg.reps, "Replicates per scenario")->check(CLI::PositiveNumber);
  CLI::Option* oseed = sim->add_option("--seed", mcfg.io.seed, "Study seed (required)");
  sim->add_option("--threads", mcfg.io.threads, "Worker threads; never changes results")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", mcfg.io.out, "Write output to this file instead of stdout");
  sim->add_option("--format", mcfg.io.format, "Output format (simulate always writes CSV)")
      ->check(CLI::IsMember({"json", "csv", "table"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (est->parsed()) return cmd_estimate(ecfg);
    if (sens->parsed()) {
      scfg.point_given = oe1->count() || oe0->count() || on1->count() || on0->count();
      return cmd_sensitivity(scfg);
    }
    if (bal->parsed()) return cmd_balance(bcfg);
    if (sim->parsed()) {
      if (oseed->count() == 0) {
        std::cerr << "simulate requires --seed\n";
        return 2;
      }
      return cmd_simulate(mcfg);
    }
  } catch (const pce::Error& e) {
    std::cerr << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
