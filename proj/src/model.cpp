/*
 * Copyright 2026 The greenfilter Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "greenfilter/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace greenfilter {

using nlohmann::json;

MatrixSchedule MatrixSchedule::constant(Matrix value) {
  MatrixSchedule s;
  s.kind_ = Kind::Constant;
  s.constant_ = std::move(value);
  return s;
}

MatrixSchedule MatrixSchedule::tabulated(const TimeGrid& grid, MatrixPath samples) {
  MatrixSchedule s;
  s.kind_ = Kind::Tabulated;
  s.samples_ = std::move(samples);
  s.grid_ = grid;
  return s;
}

Eigen::Index MatrixSchedule::rows() const noexcept {
  if (is_constant()) return constant_.rows();
  return samples_.empty() ? 0 : samples_.front().rows();
}

Eigen::Index MatrixSchedule::cols() const noexcept {
  if (is_constant()) return constant_.cols();
  return samples_.empty() ? 0 : samples_.front().cols();
}

Matrix MatrixSchedule::at(double t) const {
  if (is_constant()) return constant_;
  const TimeGrid& g = *grid_;
  if (samples_.size() != g.size()) {
    throw Error(ErrorKind::GridMismatch, "tabulated schedule length differs from grid");
  }
  const double tol = 1e-12 * std::max(1.0, g.T() - g.t0());
  if (!(t >= g.t0() - tol && t <= g.T() + tol)) {
    throw Error(ErrorKind::OutOfHorizon, "schedule evaluated at t = " + std::to_string(t));
  }
  const double pos = std::clamp((t - g.t0()) / g.step(), 0.0, static_cast<double>(g.n_steps()));
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= g.n_steps()) return samples_.back();
  const double theta = pos - static_cast<double>(k);
  if (theta == 0.0) return samples_[k];
  return (1.0 - theta) * samples_[k] + theta * samples_[k + 1];
}

Matrix MatrixSchedule::at_index(std::size_t k) const {
  if (is_constant()) return constant_;
  return samples_.at(k);
}

Matrix eval(const MatrixSchedule& schedule, double t) { return schedule.at(t); }

bool LtvModel::time_invariant() const noexcept {
  return F.is_constant() && G.is_constant() && Q.is_constant() && H.is_constant() &&
         R.is_constant() && f.is_constant() && h.is_constant();
}

Matrix LtvModel::GQG(double t) const {
  const Matrix g = G.at(t);
  return symmetrize(g * Q.at(t) * g.transpose());
}

Matrix LtvModel::Rinv(double t) const {
  return symmetrize(R.at(t).ldlt().solve(Matrix::Identity(m(), m())));
}

Matrix LtvModel::HtRinvH(double t) const {
  const Matrix hm = H.at(t);
  return symmetrize(hm.transpose() * R.at(t).ldlt().solve(hm));
}

Matrix LtvModel::HtRinv(double t) const {
  const Matrix hm = H.at(t);
  return R.at(t).ldlt().solve(hm).transpose();
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Checker {
  const LtvModel& model;
  std::vector<Violation> out;

  void add(std::string field, std::string code, std::string message) {
    out.push_back({std::move(field), std::move(code), std::move(message)});
  }

  bool shape(const MatrixSchedule& s, const std::string& name, Eigen::Index rows,
             Eigen::Index cols) {
    if (!s.is_constant()) {
      if (!s.grid() || !(*s.grid() == model.grid) || s.samples().size() != model.grid.size()) {
        add(name, "tabulated_length",
            name + " must have one sample per grid point (" +
                std::to_string(model.grid.size()) + ")");
        return false;
      }
      for (const Matrix& m : s.samples()) {
        if (m.rows() != rows || m.cols() != cols) {
          add(name, "dimension", name + " samples do not share the expected dimensions");
          return false;
        }
      }
    } else if (s.rows() != rows || s.cols() != cols) {
      add(name, "dimension",
          name + " is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
              ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
      return false;
    }
    return true;
  }

  template <typename Fn>
  void each_sample(const MatrixSchedule& s, Fn fn) {
    if (s.is_constant()) {
      fn(s.constant_value(), 0);
    } else {
      for (std::size_t k = 0; k < s.samples().size(); ++k) fn(s.samples()[k], k);
    }
  }

  void finite(const MatrixSchedule& s, const std::string& name) {
    bool ok = true;
    each_sample(s, [&](const Matrix& m, std::size_t) { ok = ok && m.allFinite(); });
    if (!ok) add(name, "non_finite", name + " has non-finite entries");
  }

  static bool symmetric(const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= kPsdTolerance * scale;
  }

  void psd(const Matrix& m, const std::string& name, const std::string& where) {
    if (!m.allFinite()) {
      add(name, "non_finite", name + " has non-finite entries");
      return;
    }
    if (!symmetric(m)) {
      add(name, "not_symmetric", name + " not symmetric" + where);
    } else if (min_eigenvalue(m) < -kPsdTolerance) {
      add(name, "not_psd", name + " not PSD" + where);
    }
  }
};

}  // namespace

std::vector<Violation> validate(const LtvModel& model) {
  Checker c{model, {}};
  const Eigen::Index n = model.Pi0.rows();
  const Eigen::Index p = model.Q.rows();
  const Eigen::Index m = model.R.rows();
  if (n < 1) c.add("Pi0", "dimension", "state dimension must be at least 1");
  if (p < 1) c.add("Q", "dimension", "plant noise dimension must be at least 1");
  if (m < 1) c.add("R", "dimension", "observation dimension must be at least 1");
  if (!c.out.empty()) return c.out;

  if (model.Pi0.cols() != n) c.add("Pi0", "dimension", "Pi0 must be square");
  if (model.SigmaT.rows() != n || model.SigmaT.cols() != n) {
    c.add("SigmaT", "dimension", "SigmaT must be n x n");
  }
  if (model.x0.size() != n) c.add("x0", "dimension", "x0 must have n entries");
  if (model.y0.size() != m) c.add("y0", "dimension", "y0 must have m entries");

  const bool shapes_ok = c.shape(model.F, "F", n, n) & c.shape(model.G, "G", n, p) &
                         c.shape(model.Q, "Q", p, p) & c.shape(model.H, "H", m, n) &
                         c.shape(model.R, "R", m, m) & c.shape(model.f, "f", n, 1) &
                         c.shape(model.h, "h", m, 1);
  if (!shapes_ok || !c.out.empty()) return c.out;

  c.finite(model.F, "F");
  c.finite(model.G, "G");
  c.finite(model.H, "H");
  c.finite(model.f, "f");
  c.finite(model.h, "h");
  if (!model.x0.allFinite()) c.add("x0", "non_finite", "x0 has non-finite entries");
  if (!model.y0.allFinite()) c.add("y0", "non_finite", "y0 has non-finite entries");

  c.psd(model.Pi0, "Pi0", "");
  c.psd(model.SigmaT, "SigmaT", "");
  c.each_sample(model.Q, [&](const Matrix& q, std::size_t k) {
    c.psd(q, "Q", model.Q.is_constant() ? "" : " at grid index " + std::to_string(k));
  });

  bool r_reported = false;
  c.each_sample(model.R, [&](const Matrix& r, std::size_t k) {
    if (r_reported) return;
    const std::string where =
        model.R.is_constant() ? "" : " at grid index " + std::to_string(k);
    if (!r.allFinite() || !Checker::symmetric(r)) {
      c.add("R", "not_symmetric", "R not symmetric" + where);
      r_reported = true;
    } else if (min_eigenvalue(r) < kMinObservationNoise) {
      c.add("R", "not_uniformly_pd", "R not uniformly positive definite" + where);
      r_reported = true;
    }
  });
  return c.out;
}

namespace {

std::string describe(const std::vector<Violation>& v) {
  std::ostringstream os;
  os << v.size() << " violation(s)";
  for (const auto& item : v) os << "; " << item.message;
  return os.str();
}

}  // namespace

ValidationFailure::ValidationFailure(std::vector<Violation> violations)
    : Error(ErrorKind::ValidationError, describe(violations)),
      violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// JSON config

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::ParseError, "field '" + field + "': " + why);
}

const json& require(const json& root, const std::string& field) {
  auto it = root.find(field);
  if (it == root.end()) parse_fail(field, "missing");
  return *it;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) parse_fail(field, "expected a number");
  return j.get<double>();
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) parse_fail(field, "expected a non-empty array");
  // Flat arrays are accepted as column vectors.
  if (!j.front().is_array()) {
    Matrix out(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = number(j[i], field);
    return out;
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  if (cols == 0) parse_fail(field, "empty row");
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      parse_fail(field, "rows must all have the same length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = number(row[static_cast<std::size_t>(c)], field);
  }
  return out;
}

Vector vector_from_json(const json& j, const std::string& field) {
  const Matrix m = matrix_from_json(j, field);
  if (m.cols() != 1 && m.rows() != 1) parse_fail(field, "expected a vector");
  return m.cols() == 1 ? Vector(m.col(0)) : Vector(m.row(0).transpose());
}

MatrixSchedule schedule_from_json(const json& j, const std::string& field, const TimeGrid& grid) {
  if (j.is_object()) {
    if (auto it = j.find("constant"); it != j.end()) {
      return MatrixSchedule::constant(matrix_from_json(*it, field));
    }
    if (auto it = j.find("tabulated"); it != j.end()) {
      if (!it->is_array() || it->empty()) parse_fail(field, "tabulated must be a non-empty array");
      MatrixPath samples;
      samples.reserve(it->size());
      for (const json& s : *it) samples.push_back(matrix_from_json(s, field));
      return MatrixSchedule::tabulated(grid, std::move(samples));
    }
    parse_fail(field, "expected {\"constant\": ...} or {\"tabulated\": ...}");
  }
  if (j.is_array()) return MatrixSchedule::constant(matrix_from_json(j, field));
  parse_fail(field, "expected a schedule");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json schedule_to_json(const MatrixSchedule& s) {
  if (s.is_constant()) return json{{"constant", matrix_to_json(s.constant_value())}};
  json samples = json::array();
  for (const Matrix& m : s.samples()) samples.push_back(matrix_to_json(m));
  return json{{"tabulated", std::move(samples)}};
}

}  // namespace

LtvModel load_model(std::string_view config_text) {
  json root;
  try {
    root = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::ParseError, "config must be a JSON object");

  const double t0 = number(require(root, "t0"), "t0");
  const double T = number(require(root, "T"), "T");
  const json& steps = require(root, "n_steps");
  if (!steps.is_number_integer() || steps.get<long long>() < 1) {
    parse_fail("n_steps", "expected a positive integer");
  }
  if (!(T > t0)) parse_fail("T", "must exceed t0");

  LtvModel model;
  model.grid = TimeGrid(t0, T, static_cast<std::size_t>(steps.get<long long>()));
  model.F = schedule_from_json(require(root, "F"), "F", model.grid);
  model.G = schedule_from_json(require(root, "G"), "G", model.grid);
  model.Q = schedule_from_json(require(root, "Q"), "Q", model.grid);
  model.H = schedule_from_json(require(root, "H"), "H", model.grid);
  model.R = schedule_from_json(require(root, "R"), "R", model.grid);
  model.f = schedule_from_json(require(root, "f"), "f", model.grid);
  model.h = schedule_from_json(require(root, "h"), "h", model.grid);
  model.x0 = vector_from_json(require(root, "x0"), "x0");
  model.y0 = vector_from_json(require(root, "y0"), "y0");
  const json& pi0 = require(root, "Pi0");
  model.Pi0 = pi0.is_object() ? matrix_from_json(require(pi0, "constant"), "Pi0")
                              : matrix_from_json(pi0, "Pi0");
  const json& sigmaT = require(root, "SigmaT");
  model.SigmaT = sigmaT.is_object() ? matrix_from_json(require(sigmaT, "constant"), "SigmaT")
                                    : matrix_from_json(sigmaT, "SigmaT");

  for (const char* dim : {"n", "p", "m"}) {
    auto it = root.find(dim);
    if (it == root.end()) continue;
    if (!it->is_number_integer()) parse_fail(dim, "expected an integer");
    const long long declared = it->get<long long>();
    const Eigen::Index actual = std::string(dim) == "n"   ? model.n()
                                : std::string(dim) == "p" ? model.p()
                                                          : model.m();
    if (declared != actual) {
      throw ValidationFailure({{dim, "dimension",
                                std::string(dim) + " = " + std::to_string(declared) +
                                    " disagrees with matrix shapes (" + std::to_string(actual) +
                                    ")"}});
    }
  }

  auto violations = validate(model);
  if (!violations.empty()) throw ValidationFailure(std::move(violations));
  return model;
}

LtvModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open model file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_model(buffer.str());
}

std::string serialize_model(const LtvModel& model) {
  json root;
  root["t0"] = model.grid.t0();
  root["T"] = model.grid.T();
  root["n_steps"] = model.grid.n_steps();
  root["n"] = model.n();
  root["p"] = model.p();
  root["m"] = model.m();
  root["F"] = schedule_to_json(model.F);
  root["G"] = schedule_to_json(model.G);
  root["Q"] = schedule_to_json(model.Q);
  root["H"] = schedule_to_json(model.H);
  root["R"] = schedule_to_json(model.R);
  root["f"] = schedule_to_json(model.f);
  root["h"] = schedule_to_json(model.h);
  root["x0"] = vector_to_json(model.x0);
  root["y0"] = vector_to_json(model.y0);
  root["Pi0"] = matrix_to_json(model.Pi0);
  root["SigmaT"] = matrix_to_json(model.SigmaT);
  return root.dump(2);
}

}  // namespace greenfilter
