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
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "greenfilter/numcore.hpp"

namespace greenfilter {

/// A time-dependent matrix: either a constant or one sample per grid point,
/// linearly interpolated in between.
class MatrixSchedule {
 public:
  enum class Kind { Constant, Tabulated };

  MatrixSchedule() = default;
  static MatrixSchedule constant(Matrix value);
  static MatrixSchedule tabulated(const TimeGrid& grid, MatrixPath samples);

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::Constant; }
  Eigen::Index rows() const noexcept;
  Eigen::Index cols() const noexcept;
  const Matrix& constant_value() const { return constant_; }
  const MatrixPath& samples() const noexcept { return samples_; }
  const std::optional<TimeGrid>& grid() const noexcept { return grid_; }

  /// Exact at grid points; piecewise-linear in between. Throws OutOfHorizon.
  Matrix at(double t) const;
  /// Value at grid index k (no interpolation).
  Matrix at_index(std::size_t k) const;

 private:
  Kind kind_ = Kind::Constant;
  Matrix constant_;
  MatrixPath samples_;
  std::optional<TimeGrid> grid_;
};

Matrix eval(const MatrixSchedule& schedule, double t);

/// Linear time-varying estimation problem on a fixed horizon:
///   dx = (F x + f) dt + G dw,  x(t0) = x0 + xi,  xi ~ N(0, Pi0),  E[dw dw'] = Q dt
///   dy = (H x + h) dt + db,    y(t0) = y0,                      E[db db'] = R dt
/// with a terminal information weight SigmaT.
struct LtvModel {
  TimeGrid grid{0.0, 1.0, 1};
  MatrixSchedule F, G, Q, H, R;
  MatrixSchedule f, h;
  Vector x0, y0;
  Matrix Pi0, SigmaT;

  Eigen::Index n() const noexcept { return Pi0.rows(); }
  Eigen::Index p() const noexcept { return Q.rows(); }
  Eigen::Index m() const noexcept { return R.rows(); }

  /// True when every schedule is constant.
  bool time_invariant() const noexcept;

  Matrix GQG(double t) const;
  Matrix Rinv(double t) const;
  /// H* R^-1 H
  Matrix HtRinvH(double t) const;
  /// H* R^-1
  Matrix HtRinv(double t) const;
};

struct Violation {
  std::string field;
  std::string code;
  std::string message;
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kMinObservationNoise = 1e-10;

std::vector<Violation> validate(const LtvModel& model);

/// Raised by load_model when the parsed model breaks an invariant.
class ValidationFailure : public Error {
 public:
  explicit ValidationFailure(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

LtvModel load_model(std::string_view config_text);
LtvModel load_model_file(const std::string& path);
std::string serialize_model(const LtvModel& model);

}  // namespace greenfilter
