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
#include "greenfilter/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace greenfilter {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::IndefiniteMatrix: return "IndefiniteMatrix";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::OffGrid: return "OffGrid";
    case ErrorKind::OutOfHorizon: return "OutOfHorizon";
    case ErrorKind::SingularFundamental: return "SingularFundamental";
    case ErrorKind::IllConditionedBlock: return "IllConditionedBlock";
    case ErrorKind::SingularRecovery: return "SingularRecovery";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::ProjectionFailure: return "ProjectionFailure";
    case ErrorKind::InsufficientPaths: return "InsufficientPaths";
    case ErrorKind::MissingRepresentative: return "MissingRepresentative";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

TimeGrid::TimeGrid(double t0, double T, std::size_t n_steps)
    : t0_(t0), T_(T), n_steps_(n_steps) {
  if (!(T > t0) || n_steps == 0 || !std::isfinite(t0) || !std::isfinite(T)) {
    throw Error(ErrorKind::GridMismatch, "time grid needs T > t0 and n_steps >= 1");
  }
  h_ = (T - t0) / static_cast<double>(n_steps);
  points_.resize(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    points_[k] = t0 + static_cast<double>(k) * h_;
  }
  points_.back() = T;
}

std::size_t TimeGrid::index_of(double t) const {
  const double tol = 1e-12 * std::max(1.0, T_ - t0_);
  if (!std::isfinite(t) || t < t0_ - tol || t > T_ + tol) {
    throw Error(ErrorKind::OffGrid, "time " + std::to_string(t) + " outside horizon");
  }
  const double pos = (t - t0_) / h_;
  const auto k = static_cast<std::size_t>(std::clamp(std::llround(pos), 0LL,
                                                     static_cast<long long>(n_steps_)));
  if (std::abs(points_[k] - t) > tol) {
    throw Error(ErrorKind::OffGrid, "time " + std::to_string(t) + " is not a grid point");
  }
  return k;
}

bool TimeGrid::contains(double t) const noexcept {
  try {
    (void)index_of(t);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<double> TimeGrid::trapezoid_weights() const {
  std::vector<double> w(size(), h_);
  w.front() = 0.5 * h_;
  w.back() = 0.5 * h_;
  return w;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::GridMismatch, std::string(what) + " expects a square matrix");
  }
}

}  // namespace

Matrix psd_sqrt(const Matrix& m, double tol) {
  require_square(m, "psd_sqrt");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw Error(ErrorKind::NotSymmetric, "psd_sqrt input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m));
  Vector ev = eig.eigenvalues();
  if (ev.minCoeff() < -tol * scale) {
    throw Error(ErrorKind::IndefiniteMatrix,
                "psd_sqrt input has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  const Matrix& U = eig.eigenvectors();
  return symmetrize(U * ev.asDiagonal() * U.transpose());
}

Matrix pinv(const Matrix& m, double tol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  Matrix result = Matrix::Zero(m.cols(), m.rows());
  if (sv.size() == 0 || sv(0) == 0.0) return result;
  const double cutoff = tol * sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      result += (1.0 / sv(i)) * svd.matrixV().col(i) * svd.matrixU().col(i).transpose();
    }
  }
  return result;
}

Matrix expm(const Matrix& m) {
  require_square(m, "expm");
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  }
  const Matrix A = m / std::ldexp(1.0, squarings);
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                        b[3] * A2 + b[1] * I);
  const Matrix V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  Matrix result = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

double min_eigenvalue(const Matrix& m) {
  require_square(m, "min_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

MatrixPath rk4_integrate(const OdeRhs& rhs, const Matrix& x0, const TimeGrid& grid,
                         Direction direction,
                         const std::function<Matrix(const Matrix&)>& post_step) {
  const std::size_t n = grid.size();
  MatrixPath path(n);
  const bool forward = direction == Direction::Forward;
  const double h = forward ? grid.step() : -grid.step();
  std::size_t k = forward ? 0 : n - 1;
  path[k] = x0;
  if (!all_finite(x0)) throw Error(ErrorKind::NonFiniteState, "initial state is not finite");
  for (std::size_t step = 0; step + 1 < n; ++step) {
    const double t = grid[k];
    const Matrix& x = path[k];
    const Matrix k1 = rhs(t, x);
    const Matrix k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1);
    const Matrix k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2);
    const std::size_t next = forward ? k + 1 : k - 1;
    const Matrix k4 = rhs(grid[next], x + h * k3);
    Matrix x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (post_step) x_next = post_step(x_next);
    if (!all_finite(x_next)) {
      throw Error(ErrorKind::NonFiniteState,
                  "state became non-finite at t = " + std::to_string(grid[next]));
    }
    path[next] = std::move(x_next);
    k = next;
  }
  return path;
}

Matrix trapezoid(std::span<const Matrix> values, const TimeGrid& grid) {
  if (values.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "trapezoid needs one value per grid point");
  }
  Matrix acc = Matrix::Zero(values[0].rows(), values[0].cols());
  for (std::size_t k = 0; k + 1 < values.size(); ++k) acc += values[k] + values[k + 1];
  return (0.5 * grid.step()) * acc;
}

Matrix simpson(std::span<const Matrix> values, const TimeGrid& grid) {
  if (values.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "simpson needs one value per grid point");
  }
  const std::size_t N = grid.n_steps();
  if (N < 2) return trapezoid(values, grid);
  const double h = grid.step();
  const std::size_t even = N % 2 == 0 ? N : N - 3;
  Matrix acc = Matrix::Zero(values[0].rows(), values[0].cols());
  for (std::size_t k = 0; k + 2 <= even; k += 2) {
    acc += (h / 3.0) * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
  }
  if (even != N) {
    acc += (3.0 * h / 8.0) *
           (values[even] + 3.0 * values[even + 1] + 3.0 * values[even + 2] + values[even + 3]);
  }
  return acc;
}

MatrixPath cumulative_trapezoid(std::span<const Matrix> values, const TimeGrid& grid) {
  if (values.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "cumulative_trapezoid needs one value per grid point");
  }
  MatrixPath out(values.size());
  out[0] = Matrix::Zero(values[0].rows(), values[0].cols());
  const double half_h = 0.5 * grid.step();
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    out[k + 1] = out[k] + half_h * (values[k] + values[k + 1]);
  }
  return out;
}

Vector interpolate_path(const VectorPath& path, const TimeGrid& grid, double t) {
  if (path.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "path length differs from grid");
  }
  const double tol = 1e-12 * std::max(1.0, grid.T() - grid.t0());
  if (!(t >= grid.t0() - tol && t <= grid.T() + tol)) {
    throw Error(ErrorKind::OutOfHorizon, "time " + std::to_string(t) + " outside horizon");
  }
  const double pos =
      std::clamp((t - grid.t0()) / grid.step(), 0.0, static_cast<double>(grid.n_steps()));
  const auto k = std::min(static_cast<std::size_t>(pos), grid.n_steps() - 1);
  const double theta = pos - static_cast<double>(k);
  return (1.0 - theta) * path[k] + theta * path[k + 1];
}

MatrixPath to_matrix_path(const VectorPath& path) {
  MatrixPath out;
  out.reserve(path.size());
  for (const Vector& v : path) out.emplace_back(v);
  return out;
}

VectorPath to_vector_path(const MatrixPath& path) {
  VectorPath out;
  out.reserve(path.size());
  for (const Matrix& m : path) out.emplace_back(m.col(0));
  return out;
}

Matrix hermite(const Matrix& y0, const Matrix& d0, const Matrix& y1, const Matrix& d1,
               double h, double theta) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + theta;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y0 + (h10 * h) * d0 + h01 * y1 + (h11 * h) * d1;
}

}  // namespace greenfilter
