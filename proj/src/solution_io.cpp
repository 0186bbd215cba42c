#include "bps/solution_io.hpp"

#include "bps/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bps {
namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    a.push_back(std::move(row));
  }
  return a;
}

double read_number(const json& j, const std::string& what) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw Error(ErrorCode::Parse, what + " is not a number");
  return j.get<double>();
}

Eigen::VectorXd read_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, what + " is not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_number(j[i], what);
  return v;
}

// Rows of equal length; a flat array is read as a single column.
Eigen::MatrixXd read_matrix(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, what + " is not an array");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) return read_vector(j, what);
  const size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw Error(ErrorCode::Parse, what + " has ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = read_number(j[r][c], what);
    }
  }
  return m;
}

json check_json(const NamedCheck& c) {
  return {{"name", c.name},   {"available", c.available}, {"value", number(c.value)},
          {"tolerance", number(c.tolerance)}, {"passed", c.passed}, {"detail", c.detail}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string solution_to_json(const TrajectorySolution& s, int indent) {
  json j;
  j["schema"] = kSolutionSchema;
  j["problem"] = s.problem;
  j["grid"] = s.grid;
  j["N"] = s.order;
  j["t"] = vector_json(s.t);
  j["X"] = matrix_json(s.X);
  j["V"] = matrix_json(s.V);
  j["U"] = matrix_json(s.U);
  j["xa"] = vector_json(s.xa);
  j["xb"] = vector_json(s.xb);
  j["p"] = vector_json(s.p);
  j["ta"] = number(s.ta);
  j["tf"] = number(s.tf);
  j["objective"] = number(s.objective);
  j["cost_scale"] = number(s.cost_scale);
  j["status"] = s.status;
  j["kkt"] = {{"stationarity", number(s.kkt.stationarity)},
              {"feasibility", number(s.kkt.feasibility)},
              {"complementarity", number(s.kkt.complementarity)}};
  j["iterations"] = s.iterations;
  if (s.has_duals) {
    j["lambda"] = matrix_json(s.lambda);
    j["mu"] = matrix_json(s.mu);
    j["nu"] = vector_json(s.nu);
    j["hamiltonian"] = vector_json(s.hamiltonian);
  }
  j["quadrature_weights"] = vector_json(s.quadrature_weights);
  return j.dump(indent);
}

TrajectorySolution solution_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("solution JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Parse, "solution JSON must be an object");
  if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != kSolutionSchema) {
    throw Error(ErrorCode::Parse, "solution JSON needs \"schema\": " + std::to_string(kSolutionSchema));
  }
  for (const char* key : {"t", "X", "U"}) {
    if (!j.contains(key)) throw Error(ErrorCode::Parse, std::string("solution JSON lacks \"") + key + "\"");
  }
  TrajectorySolution s;
  try {
    s.problem = j.value("problem", std::string());
    s.grid = j.value("grid", std::string());
    s.order = j.value("N", 0);
    s.t = read_vector(j["t"], "t");
    s.X = read_matrix(j["X"], "X");
    s.U = read_matrix(j["U"], "U");
    const Eigen::Index n = s.t.size();
    if (n < 2) throw Error(ErrorCode::Parse, "solution needs at least two time samples");
    if (s.X.rows() != n || s.U.rows() != n) throw Error(ErrorCode::Parse, "X and U need one row per time sample");
    if (j.contains("V")) s.V = read_matrix(j["V"], "V");
    s.xa = j.contains("xa") ? read_vector(j["xa"], "xa") : Eigen::VectorXd(s.X.row(0).transpose());
    s.xb = j.contains("xb") ? read_vector(j["xb"], "xb") : Eigen::VectorXd(s.X.row(n - 1).transpose());
    if (j.contains("p")) s.p = read_vector(j["p"], "p");
    s.ta = j.contains("ta") ? read_number(j["ta"], "ta") : s.t[0];
    s.tf = j.contains("tf") ? read_number(j["tf"], "tf") : s.t[n - 1];
    s.objective = j.contains("objective") ? read_number(j["objective"], "objective")
                                          : std::numeric_limits<double>::quiet_NaN();
    s.cost_scale = j.contains("cost_scale") ? read_number(j["cost_scale"], "cost_scale") : 1.0;
    s.status = j.value("status", std::string("Feasible"));
    if (j.contains("kkt") && j["kkt"].is_object()) {
      const json& k = j["kkt"];
      if (k.contains("stationarity")) s.kkt.stationarity = read_number(k["stationarity"], "kkt");
      if (k.contains("feasibility")) s.kkt.feasibility = read_number(k["feasibility"], "kkt");
      if (k.contains("complementarity")) s.kkt.complementarity = read_number(k["complementarity"], "kkt");
    }
    s.iterations = j.value("iterations", 0);
    if (j.contains("lambda")) {
      s.has_duals = true;
      s.lambda = read_matrix(j["lambda"], "lambda");
      if (s.lambda.rows() != n) throw Error(ErrorCode::Parse, "lambda needs one row per time sample");
      if (j.contains("mu")) s.mu = read_matrix(j["mu"], "mu");
      if (s.mu.size() == 0) s.mu.resize(n, 0);
      if (j.contains("nu")) s.nu = read_vector(j["nu"], "nu");
      if (j.contains("hamiltonian")) s.hamiltonian = read_vector(j["hamiltonian"], "hamiltonian");
    }
    if (j.contains("quadrature_weights")) s.quadrature_weights = read_vector(j["quadrature_weights"], "weights");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("solution JSON: ") + e.what());
  }
  if (!std::isfinite(s.ta) || !std::isfinite(s.tf) || !(s.tf > s.ta)) {
    throw Error(ErrorCode::Parse, "solution needs finite ta < tf");
  }
  return s;
}

std::string report_to_json(const VnvReport& r, int indent) {
  json j;
  j["passed"] = r.passed();
  j["feasibility"] = {{"verdict", r.feasibility.verdict},
                      {"terminal_error_inf", number(r.feasibility.terminal_error_inf)},
                      {"path_violation_inf", number(r.feasibility.path_violation_inf)},
                      {"tol_bc", number(r.feasibility.tol_bc)},
                      {"tol_path", number(r.feasibility.tol_path)}};
  json checks = json::array();
  for (const auto& c : r.pontryagin.checks) checks.push_back(check_json(c));
  j["pontryagin"] = {{"available", r.pontryagin.available}, {"passed", r.pontryagin.passed()}, {"checks", checks}};
  j["propagation"] = {{"samples", r.propagation.t.size()},
                      {"terminal", vector_json(r.propagation.terminal)},
                      {"terminal_error", vector_json(r.propagation.terminal_error)},
                      {"path_violation", number(r.propagation.path_violation)}};
  return j.dump(indent);
}

std::string propagation_csv(const PropagationResult& prop, const ControlSignal& control) {
  std::ostringstream out;
  const Eigen::Index nx = prop.x.cols();
  out << "t";
  for (Eigen::Index i = 0; i < nx; ++i) out << ",x" << i;
  for (int i = 0; i < control.dim(); ++i) out << ",u" << i;
  out << "\n";
  for (size_t k = 0; k < prop.t.size(); ++k) {
    out << format_double(prop.t[k]);
    for (Eigen::Index i = 0; i < nx; ++i) out << "," << format_double(prop.x(static_cast<Eigen::Index>(k), i));
    const Eigen::VectorXd u = control(prop.t[k]);
    for (Eigen::Index i = 0; i < u.size(); ++i) out << "," << format_double(u[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace bps
