#include "pce/data.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pce {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError: return "parse error";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kNonBinaryTreatment: return "non-binary treatment";
    case ErrorKind::kNonBinaryIntermediate: return "non-binary intermediate";
    case ErrorKind::kInconsistentCovariateDim: return "inconsistent covariate dimension";
    case ErrorKind::kEmptyDataset: return "empty dataset";
    case ErrorKind::kEmptyCell: return "empty cell";
    case ErrorKind::kDegenerateResponse: return "degenerate response";
    case ErrorKind::kRankDeficientDesign: return "rank-deficient design";
    case ErrorKind::kPositivityViolation: return "positivity violation";
    case ErrorKind::kDivisionByZero: return "division by zero";
    case ErrorKind::kDegenerateStratum: return "degenerate stratum";
    case ErrorKind::kNonPositiveDenominator: return "non-positive denominator";
    case ErrorKind::kTooManyFailures: return "too many failures";
  }
  return "error";
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Dataset make_dataset(Eigen::VectorXi z, Eigen::VectorXi s, Eigen::VectorXd y, Eigen::MatrixXd x) {
  Eigen::Index n = z.size();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "dataset has no rows");
  if (s.size() != n || y.size() != n || x.rows() != n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "z has " + std::to_string(n) + " rows but s/y/x have " +
                    std::to_string(s.size()) + "/" + std::to_string(y.size()) + "/" +
                    std::to_string(x.rows()));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (z[i] != 0 && z[i] != 1) {
      throw Error(ErrorKind::kNonBinaryTreatment,
                  "data row " + std::to_string(i + 1) + ": z must be 0 or 1, got " +
                      std::to_string(z[i]));
    }
    if (s[i] != 0 && s[i] != 1) {
      throw Error(ErrorKind::kNonBinaryIntermediate,
                  "data row " + std::to_string(i + 1) + ": s must be 0 or 1, got " +
                      std::to_string(s[i]));
    }
  }
  return Dataset{std::move(z), std::move(s), std::move(y), std::move(x)};
}

ValidationReport validate(const Dataset& ds) {
  ValidationReport rep;
  rep.n = ds.n();
  if (rep.n == 0) throw Error(ErrorKind::kEmptyDataset, "dataset has no rows");
  if (ds.s.size() != rep.n || ds.y.size() != rep.n || ds.x.rows() != rep.n) {
    throw Error(ErrorKind::kInconsistentCovariateDim,
                "z/s/y/x row counts disagree: " + std::to_string(rep.n) + "/" +
                    std::to_string(ds.s.size()) + "/" + std::to_string(ds.y.size()) + "/" +
                    std::to_string(ds.x.rows()));
  }
  rep.k = ds.k();
  rep.strong_monotonicity_ok = true;
  for (Eigen::Index i = 0; i < rep.n; ++i) {
    if (ds.z[i] != 0 && ds.z[i] != 1) {
      throw Error(ErrorKind::kNonBinaryTreatment,
                  "data row " + std::to_string(i + 1) + ": z must be 0 or 1, got " +
                      std::to_string(ds.z[i]));
    }
    if (ds.s[i] != 0 && ds.s[i] != 1) {
      throw Error(ErrorKind::kNonBinaryIntermediate,
                  "data row " + std::to_string(i + 1) + ": s must be 0 or 1, got " +
                      std::to_string(ds.s[i]));
    }
    rep.n_treated += ds.z[i];
    rep.cell_count[static_cast<std::size_t>(ds.z[i] * 2 + ds.s[i])] += 1;
    if (ds.z[i] == 0 && ds.s[i] == 1) rep.strong_monotonicity_ok = false;
  }
  for (int z = 0; z < 2; ++z) {
    for (int s = 0; s < 2; ++s) {
      if (rep.cell_count[static_cast<std::size_t>(z * 2 + s)] == 0) {
        rep.warnings.push_back("cell z=" + std::to_string(z) + ", s=" + std::to_string(s) +
                               " is empty");
      }
    }
  }
  if (rep.n_treated == 0) rep.warnings.push_back("no treated units");
  if (rep.n_treated == rep.n) rep.warnings.push_back("no control units");
  return rep;
}

PrincipalScores strata_from_scores(const Eigen::VectorXd& p1, const Eigen::VectorXd& p0) {
  if (p1.size() != p0.size()) {
    throw Error(ErrorKind::kInvalidArgument, "p1 has " + std::to_string(p1.size()) +
                                                 " entries, p0 has " + std::to_string(p0.size()));
  }
  if (p1.size() == 0) throw Error(ErrorKind::kEmptyDataset, "no score entries");
  PrincipalScores ps;
  ps.p1 = p1;
  ps.p0 = p0;
  ps.e10 = p1 - p0;
  ps.e00 = Eigen::VectorXd::Ones(p1.size()) - p1;
  ps.e11 = p0;
  Eigen::Index n_violated = 0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p1.size(); ++i) {
    if (!(p1[i] >= 0.0 && p1[i] <= 1.0) || !(p0[i] >= 0.0 && p0[i] <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "unit " + std::to_string(i + 1) + ": scores must lie in [0, 1], got p1=" +
                      format_double(p1[i]) + ", p0=" + format_double(p0[i]));
    }
    if (ps.e10[i] < 0.0) {
      ++n_violated;
      worst = std::min(worst, ps.e10[i]);
    }
  }
  if (n_violated > 0) {
    ps.warnings.push_back("monotonicity violated at " + std::to_string(n_violated) + " of " +
                          std::to_string(p1.size()) + " units (min e10 = " + format_double(worst) +
                          ")");
  }
  return ps;
}

PrincipalScores truncate_scores(const PrincipalScores& ps) {
  PrincipalScores out = ps;
  Eigen::Index n_clamped = 0;
  for (Eigen::Index i = 0; i < ps.e10.size(); ++i) {
    if (ps.e10[i] >= 0.0) continue;
    ++n_clamped;
    // Clamped triple is (0, e00, e11); dividing by its sum restores a
    // distribution and updates the implied arm scores.
    double total = ps.e00[i] + ps.e11[i];
    if (total <= 0.0) {
      throw Error(ErrorKind::kNonPositiveDenominator,
                  "unit " + std::to_string(i + 1) + ": truncated scores sum to " +
                      format_double(total));
    }
    out.e10[i] = 0.0;
    out.e00[i] = ps.e00[i] / total;
    out.e11[i] = ps.e11[i] / total;
    out.p0[i] = out.e11[i];
    out.p1[i] = out.e11[i];  // p1 = e10 + e11 with e10 = 0
  }
  if (n_clamped > 0) {
    out.warnings.push_back("e10 clamped to 0 and triples renormalized at " +
                           std::to_string(n_clamped) + " units");
  }
  return out;
}

MarginalProportions marginal_proportions(const PrincipalScores& ps, MarginalMode mode,
                                         const Eigen::VectorXd& pi_x, const Eigen::VectorXi& z,
                                         const Eigen::VectorXi& s) {
  Eigen::Index n = ps.p1.size();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "no score entries");
  MarginalProportions mp;
  if (mode == MarginalMode::kPlugin) {
    mp.p1 = ps.p1.mean();
    mp.p0 = ps.p0.mean();
  } else {
    if (pi_x.size() != n || z.size() != n || s.size() != n) {
      throw Error(ErrorKind::kInconsistentCovariateDim,
                  "doubly robust marginals need pi_x, z, s of length " + std::to_string(n));
    }
    double sum1 = 0.0;
    double sum0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double pi = pi_x[i];
      if (!(pi > 0.0 && pi < 1.0)) {
        throw Error(ErrorKind::kPositivityViolation,
                    "unit " + std::to_string(i + 1) + ": pi(x) = " + format_double(pi));
      }
      double si = static_cast<double>(s[i]);
      if (z[i] == 1) {
        sum1 += (si - ps.p1[i]) / pi + ps.p1[i];
        sum0 += ps.p0[i];
      } else {
        sum1 += ps.p1[i];
        sum0 += (si - ps.p0[i]) / (1.0 - pi) + ps.p0[i];
      }
    }
    mp.p1 = sum1 / static_cast<double>(n);
    mp.p0 = sum0 / static_cast<double>(n);
  }
  mp.e10 = mp.p1 - mp.p0;
  mp.e00 = 1.0 - mp.p1;
  mp.e11 = mp.p0;
  return mp;
}

namespace {

std::string trimmed(const std::string& field) {
  std::size_t a = field.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = field.find_last_not_of(" \t\r");
  return field.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trimmed(line.substr(start)));
      break;
    }
    fields.push_back(trimmed(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_cell(const std::string& field, std::size_t line_no, const std::string& column) {
  if (field.empty()) {
    throw Error(ErrorKind::kParseError,
                "line " + std::to_string(line_no) + ", column '" + column + "': empty cell");
  }
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ", column '" + column +
                                            "': cannot parse '" + field + "' as a number");
  }
  return value;
}

}  // namespace

Table read_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParseError, "input is empty");
  Table t;
  t.columns = split_line(line);
  for (const auto& name : t.columns) {
    if (name.empty()) throw Error(ErrorKind::kParseError, "header has an empty column name");
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    for (std::size_t j = i + 1; j < t.columns.size(); ++j) {
      if (t.columns[i] == t.columns[j]) {
        throw Error(ErrorKind::kParseError, "duplicate column name '" + t.columns[i] + "'");
      }
    }
  }
  std::vector<double> cells;
  std::size_t n_rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != t.columns.size()) {
      throw Error(ErrorKind::kParseError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(t.columns.size()) + " fields, got " +
                                              std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      cells.push_back(parse_cell(fields[j], line_no, t.columns[j]));
    }
    ++n_rows;
  }
  t.values.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cells[i * t.columns.size() + j];
    }
  }
  return t;
}

namespace {

Eigen::Index column_index(const Table& table, const std::string& name) {
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j] == name) return static_cast<Eigen::Index>(j);
  }
  throw Error(ErrorKind::kInvalidArgument, "no column named '" + name + "'");
}

Eigen::VectorXi binary_column(const Table& table, Eigen::Index col, ErrorKind kind,
                              const std::string& name) {
  Eigen::VectorXi out(table.values.rows());
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    double v = table.values(i, col);
    if (v == 0.0) {
      out[i] = 0;
    } else if (v == 1.0) {
      out[i] = 1;
    } else {
      throw Error(kind, "data row " + std::to_string(i + 1) + ": " + name +
                            " must be 0 or 1, got " + format_double(v));
    }
  }
  return out;
}

}  // namespace

Dataset dataset_from_table(const Table& table, const std::string& z_name,
                           const std::string& s_name, const std::string& y_name,
                           const std::vector<std::string>& x_names) {
  if (table.values.rows() == 0) throw Error(ErrorKind::kEmptyDataset, "CSV has no data rows");
  Eigen::Index zc = column_index(table, z_name);
  Eigen::Index sc = column_index(table, s_name);
  Eigen::Index yc = column_index(table, y_name);
  std::vector<Eigen::Index> xc;
  if (x_names.empty()) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      Eigen::Index idx = static_cast<Eigen::Index>(j);
      if (idx != zc && idx != sc && idx != yc) xc.push_back(idx);
    }
  } else {
    for (const auto& name : x_names) xc.push_back(column_index(table, name));
  }
  if (xc.empty()) throw Error(ErrorKind::kInvalidArgument, "no covariate columns selected");

  Dataset ds;
  ds.z = binary_column(table, zc, ErrorKind::kNonBinaryTreatment, z_name);
  ds.s = binary_column(table, sc, ErrorKind::kNonBinaryIntermediate, s_name);
  ds.y = table.values.col(yc);
  ds.x.resize(table.values.rows(), static_cast<Eigen::Index>(xc.size()));
  for (std::size_t j = 0; j < xc.size(); ++j) {
    ds.x.col(static_cast<Eigen::Index>(j)) = table.values.col(xc[j]);
  }
  return ds;
}

Dataset read_csv(std::istream& in) {
  return dataset_from_table(read_table(in), "z", "s", "y", {});
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kParseError, "cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  out << "z,s,y";
  for (Eigen::Index j = 0; j < ds.k(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << ds.z[i] << ',' << ds.s[i] << ',' << format_double(ds.y[i]);
    for (Eigen::Index j = 0; j < ds.k(); ++j) out << ',' << format_double(ds.x(i, j));
    out << "\n";
  }
}

void write_csv_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kParseError, "cannot open '" + path + "' for writing");
  write_csv(ds, out);
}

}  // namespace pce
