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

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace greenfilter {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A sequence of matrices, one per grid point.
using MatrixPath = std::vector<Matrix>;
using VectorPath = std::vector<Vector>;

enum class ErrorKind {
  NotSymmetric,
  IndefiniteMatrix,
  NonFiniteState,
  GridMismatch,
  OffGrid,
  OutOfHorizon,
  SingularFundamental,
  IllConditionedBlock,
  SingularRecovery,
  PreconditionViolation,
  ProjectionFailure,
  InsufficientPaths,
  MissingRepresentative,
  ParseError,
  ValidationError,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Uniform subdivision t0 = tau_0 < ... < tau_n = T.
class TimeGrid {
 public:
  TimeGrid(double t0, double T, std::size_t n_steps);

  double t0() const noexcept { return t0_; }
  double T() const noexcept { return T_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t size() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return h_; }
  double operator[](std::size_t k) const noexcept { return points_[k]; }
  const std::vector<double>& points() const noexcept { return points_; }

  /// Grid index of t; throws OffGrid if t is further than 1e-12 (relative
  /// to the horizon length) from every grid point.
  std::size_t index_of(double t) const;
  bool contains(double t) const noexcept;

  /// Composite trapezoid weights (h/2 at both ends, h inside).
  std::vector<double> trapezoid_weights() const;

  bool operator==(const TimeGrid& other) const noexcept {
    return t0_ == other.t0_ && T_ == other.T_ && n_steps_ == other.n_steps_;
  }

 private:
  double t0_;
  double T_;
  std::size_t n_steps_;
  double h_;
  std::vector<double> points_;
};

enum class Direction { Forward, Backward };

using OdeRhs = std::function<Matrix(double, const Matrix&)>;

Matrix symmetrize(const Matrix& m);
bool all_finite(const Matrix& m);

/// Symmetric PSD square root; eigenvalues in [-tol, 0) are clamped to zero.
Matrix psd_sqrt(const Matrix& m, double tol = 1e-10);

/// Moore-Penrose pseudo-inverse with singular values below
/// tol * sigma_max treated as zero.
Matrix pinv(const Matrix& m, double tol = 1e-10);

/// Matrix exponential, scaling and squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& m);

/// 2-norm condition number (infinite for singular matrices).
double condition_number(const Matrix& m);

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Matrix& m);

/// Classical RK4 with the grid's fixed step. The returned path is indexed by
/// grid point in both directions; for Direction::Backward x0 is the value at T.
/// `post_step`, when set, is applied to every accepted state (e.g. symmetrization).
MatrixPath rk4_integrate(const OdeRhs& rhs, const Matrix& x0, const TimeGrid& grid,
                         Direction direction,
                         const std::function<Matrix(const Matrix&)>& post_step = {});

/// Composite trapezoid rule over a grid path.
Matrix trapezoid(std::span<const Matrix> values, const TimeGrid& grid);

/// Composite Simpson rule; an odd panel count closes with the 3/8 rule on the
/// last three panels, a single panel falls back to the trapezoid.
Matrix simpson(std::span<const Matrix> values, const TimeGrid& grid);

/// Running trapezoid integral from t0: entry k holds the integral up to tau_k.
MatrixPath cumulative_trapezoid(std::span<const Matrix> values, const TimeGrid& grid);

/// Piecewise-linear evaluation of a grid path at an arbitrary time in [t0, T].
Vector interpolate_path(const VectorPath& path, const TimeGrid& grid, double t);

MatrixPath to_matrix_path(const VectorPath& path);
/// First column of every entry.
VectorPath to_vector_path(const MatrixPath& path);

/// Cubic Hermite interpolation on a panel [a, a+h] given end values and slopes.
Matrix hermite(const Matrix& y0, const Matrix& d0, const Matrix& y1, const Matrix& d1,
               double h, double theta);

}  // namespace greenfilter
