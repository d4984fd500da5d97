#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mpcqp/model.hpp"
#include "mpcqp/solver.hpp"

namespace mpcqp {

using nlohmann::json;

/// Problem documents use row-major nested arrays for matrices and plain
/// arrays for vectors; all numbers are 64-bit floats and round-trip exactly.
///
/// {
///   "horizon": N,
///   "model":  {"A_seq": [...], "B_seq": [...], "w_seq": [...]},
///   "costs":  {"Q_seq": [...], "R_seq": [...], "S_seq": [...],
///              "q_seq": [...], "r_seq": [...]},
///   "bounds": {"u_lower": [...], "u_upper": [...]},
///   "x0": [...]
/// }

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::invalid_argument(where + ": expected a nested array (rows of numbers)");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument(where + ": ragged rows at row " + std::to_string(i));
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of numbers");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

template <typename T>
const json& field(const json& j, const char* key, const T& where) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string(where) + ": missing field '" + key + "'");
  return *it;
}

}  // namespace detail

inline json problem_to_json(const MpcProblem& p) {
  json j;
  j["horizon"] = p.horizon();
  json a = json::array(), b = json::array(), w = json::array();
  for (const auto& m : p.model.A) a.push_back(detail::matrix_to_json(m));
  for (const auto& m : p.model.B) b.push_back(detail::matrix_to_json(m));
  for (const auto& v : p.model.w) w.push_back(v);
  j["model"] = {{"A_seq", std::move(a)}, {"B_seq", std::move(b)}, {"w_seq", std::move(w)}};
  json q = json::array(), r = json::array(), s = json::array();
  for (const auto& m : p.costs.Q) q.push_back(detail::matrix_to_json(m));
  for (const auto& m : p.costs.R) r.push_back(detail::matrix_to_json(m));
  for (const auto& m : p.costs.S) s.push_back(detail::matrix_to_json(m));
  j["costs"] = {{"Q_seq", std::move(q)}, {"R_seq", std::move(r)}, {"S_seq", std::move(s)},
                {"q_seq", p.costs.q},    {"r_seq", p.costs.r}};
  j["bounds"] = {{"u_lower", p.u_lower}, {"u_upper", p.u_upper}};
  j["x0"] = p.x0;
  return j;
}

inline MpcProblem problem_from_json(const json& j) {
  MpcProblem p;
  const int n_stages = detail::field(j, "horizon", "problem").get<int>();
  if (n_stages < 1) throw std::invalid_argument("problem: horizon must be at least 1");

  const json& model = detail::field(j, "model", "problem");
  const json& a_seq = detail::field(model, "A_seq", "model");
  const json& b_seq = detail::field(model, "B_seq", "model");
  const json& w_seq = detail::field(model, "w_seq", "model");
  if (static_cast<int>(a_seq.size()) != n_stages || static_cast<int>(b_seq.size()) != n_stages ||
      static_cast<int>(w_seq.size()) != n_stages)
    throw std::invalid_argument("model: A_seq, B_seq, w_seq must each have 'horizon' entries");
  for (int k = 0; k < n_stages; ++k) {
    p.model.A.push_back(detail::matrix_from_json(a_seq[k], "model.A_seq[" + std::to_string(k) + "]"));
    p.model.B.push_back(detail::matrix_from_json(b_seq[k], "model.B_seq[" + std::to_string(k) + "]"));
    p.model.w.push_back(detail::vector_from_json(w_seq[k], "model.w_seq[" + std::to_string(k) + "]"));
  }

  const json& costs = detail::field(j, "costs", "problem");
  const json& q_seq = detail::field(costs, "Q_seq", "costs");
  const json& r_seq = detail::field(costs, "R_seq", "costs");
  const json& s_seq = detail::field(costs, "S_seq", "costs");
  const json& qv_seq = detail::field(costs, "q_seq", "costs");
  const json& rv_seq = detail::field(costs, "r_seq", "costs");
  if (static_cast<int>(q_seq.size()) != n_stages + 1)
    throw std::invalid_argument("costs.Q_seq must have horizon+1 entries");
  if (static_cast<int>(r_seq.size()) != n_stages || static_cast<int>(s_seq.size()) != n_stages ||
      static_cast<int>(rv_seq.size()) != n_stages)
    throw std::invalid_argument("costs.R_seq, S_seq, r_seq must each have 'horizon' entries");
  if (static_cast<int>(qv_seq.size()) != n_stages + 1)
    throw std::invalid_argument("costs.q_seq must have horizon+1 entries");
  for (int k = 0; k <= n_stages; ++k) {
    p.costs.Q.push_back(detail::matrix_from_json(q_seq[k], "costs.Q_seq[" + std::to_string(k) + "]"));
    p.costs.q.push_back(detail::vector_from_json(qv_seq[k], "costs.q_seq[" + std::to_string(k) + "]"));
  }
  for (int k = 0; k < n_stages; ++k) {
    p.costs.R.push_back(detail::matrix_from_json(r_seq[k], "costs.R_seq[" + std::to_string(k) + "]"));
    p.costs.S.push_back(detail::matrix_from_json(s_seq[k], "costs.S_seq[" + std::to_string(k) + "]"));
    p.costs.r.push_back(detail::vector_from_json(rv_seq[k], "costs.r_seq[" + std::to_string(k) + "]"));
  }

  const json& bounds = detail::field(j, "bounds", "problem");
  const json& lo = detail::field(bounds, "u_lower", "bounds");
  const json& hi = detail::field(bounds, "u_upper", "bounds");
  if (static_cast<int>(lo.size()) != n_stages || static_cast<int>(hi.size()) != n_stages)
    throw std::invalid_argument("bounds must have 'horizon' stage entries");
  for (int k = 0; k < n_stages; ++k) {
    p.u_lower.push_back(detail::vector_from_json(lo[k], "bounds.u_lower[" + std::to_string(k) + "]"));
    p.u_upper.push_back(detail::vector_from_json(hi[k], "bounds.u_upper[" + std::to_string(k) + "]"));
  }
  p.x0 = detail::vector_from_json(detail::field(j, "x0", "problem"), "x0");
  return p;
}

inline MpcProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open problem file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return problem_from_json(j);
  } catch (const std::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

inline json solution_to_json(const Solution& sol, const SolveReport& rep, const Vector& u_full,
                             const Vector& x_full) {
  json j;
  j["status"] = to_string(sol.status);
  j["objective"] = sol.objective;
  j["u"] = u_full;
  j["x"] = x_full;
  j["u_blocked"] = sol.u;
  j["x_kept"] = sol.x;
  j["report"] = {{"iterations", rep.iterations},
                 {"prep_flops", rep.prep_flops},
                 {"solve_flops", rep.solve_flops},
                 {"total_flops", rep.prep_flops + rep.solve_flops},
                 {"nnz_kkt", rep.nnz_kkt},
                 {"factor_fill", rep.factor_fill}};
  return j;
}

}  // namespace mpcqp
