#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "pce/errors.hpp"

namespace pce {

// Strata under monotonicity, indexed in this order everywhere:
// 10 = responds only under treatment, 00 = never responds, 11 = always
// responds.
enum Stratum { kS10 = 0, kS00 = 1, kS11 = 2 };
inline constexpr std::array<const char*, 3> kStratumLabel = {"10", "00", "11"};

struct Dataset {
  Eigen::VectorXi z;  // binary treatment
  Eigen::VectorXi s;  // binary intermediate outcome
  Eigen::VectorXd y;  // outcome
  Eigen::MatrixXd x;  // covariates, one row per unit

  Eigen::Index n() const { return z.size(); }
  Eigen::Index k() const { return x.cols(); }
};

// Checks array shapes and the binary codings, then assembles a Dataset.
Dataset make_dataset(Eigen::VectorXi z, Eigen::VectorXi s, Eigen::VectorXd y, Eigen::MatrixXd x);

struct ValidationReport {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Eigen::Index n_treated = 0;
  std::array<Eigen::Index, 4> cell_count{};  // indexed z * 2 + s
  bool strong_monotonicity_ok = false;       // true when no control unit has s = 1
  std::vector<std::string> warnings;
};

ValidationReport validate(const Dataset& ds);

// Per-unit principal score triple implied by the two arm models. e10 is kept
// as fitted, so it can be negative; downstream code decides what to do about
// that.
struct PrincipalScores {
  Eigen::VectorXd p1;   // P(S = 1 | X, Z = 1)
  Eigen::VectorXd p0;   // P(S = 1 | X, Z = 0)
  Eigen::VectorXd e10;  // p1 - p0
  Eigen::VectorXd e00;  // 1 - p1
  Eigen::VectorXd e11;  // p0
  std::vector<std::string> warnings;
};

PrincipalScores strata_from_scores(const Eigen::VectorXd& p1, const Eigen::VectorXd& p0);

// Clamps negative e10 at zero and renormalizes that unit's triple to sum to
// one. Units that already satisfy monotonicity are passed through untouched.
PrincipalScores truncate_scores(const PrincipalScores& ps);

enum class MarginalMode { kPlugin, kDoublyRobust };

struct MarginalProportions {
  double p1 = 0;
  double p0 = 0;
  double e10 = 0;
  double e00 = 0;
  double e11 = 0;
};

// Marginal response rates per arm and the stratum proportions they imply.
// pi_x, z and s are only consulted in doubly robust mode, where the score
// means are augmented by inverse probability weighted residuals.
MarginalProportions marginal_proportions(const PrincipalScores& ps, MarginalMode mode,
                                         const Eigen::VectorXd& pi_x, const Eigen::VectorXi& z,
                                         const Eigen::VectorXi& s);

// Plain CSV table: first line is the header, every cell numeric. No quoting.
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
};

Table read_table(std::istream& in);

// Resolves column roles by name. An empty x_names takes every column that is
// not z, s, or y, in file order.
Dataset dataset_from_table(const Table& table, const std::string& z_name,
                           const std::string& s_name, const std::string& y_name,
                           const std::vector<std::string>& x_names);

// Default column contract: z, s, y, then covariates.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv_file(const Dataset& ds, const std::string& path);

// Shortest text form that parses back to the same double.
std::string format_double(double v);

}  // namespace pce
