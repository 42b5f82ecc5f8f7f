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
#include "greenfilter/riccati.hpp"

#include <algorithm>
#include <cmath>

#include "greenfilter/csv.hpp"

namespace greenfilter {

Matrix pi_rhs(const LtvModel& model, double t, const Matrix& pi) {
  const Matrix F = model.F.at(t);
  const Matrix fp = F * pi;
  return fp + fp.transpose() - pi * model.HtRinvH(t) * pi + model.GQG(t);
}

Matrix sigma_rhs(const LtvModel& model, double t, const Matrix& sigma) {
  const Matrix F = model.F.at(t);
  const Matrix sf = sigma * F;
  return -(sf + sf.transpose() - sigma * model.GQG(t) * sigma + model.HtRinvH(t));
}

MatrixPath solve_pi(const LtvModel& model) {
  return rk4_integrate([&](double t, const Matrix& pi) { return pi_rhs(model, t, pi); },
                       symmetrize(model.Pi0), model.grid, Direction::Forward, symmetrize);
}

MatrixPath solve_sigma(const LtvModel& model) {
  return rk4_integrate([&](double t, const Matrix& s) { return sigma_rhs(model, t, s); },
                       symmetrize(model.SigmaT), model.grid, Direction::Backward, symmetrize);
}

namespace {

Matrix interpolate(const TimeGrid& grid, const MatrixPath& values, const MatrixPath& slopes,
                   double t) {
  const double tol = 1e-12 * std::max(1.0, grid.T() - grid.t0());
  if (!(t >= grid.t0() - tol && t <= grid.T() + tol)) {
    throw Error(ErrorKind::OutOfHorizon, "Riccati path evaluated at t = " + std::to_string(t));
  }
  const double pos =
      std::clamp((t - grid.t0()) / grid.step(), 0.0, static_cast<double>(grid.n_steps()));
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= grid.n_steps()) return values.back();
  const double theta = pos - static_cast<double>(k);
  if (theta == 0.0) return values[k];
  return hermite(values[k], slopes[k], values[k + 1], slopes[k + 1], grid.step(), theta);
}

}  // namespace

Matrix RiccatiSolution::pi_at(double t) const { return interpolate(grid, pi_path, pi_slope, t); }

Matrix RiccatiSolution::sigma_at(double t) const {
  return interpolate(grid, sigma_path, sigma_slope, t);
}

RiccatiSolution solve_riccati(const LtvModel& model) {
  RiccatiSolution sol{model.grid, solve_pi(model), solve_sigma(model), {}, {}};
  sol.pi_slope.reserve(model.grid.size());
  sol.sigma_slope.reserve(model.grid.size());
  for (std::size_t k = 0; k < model.grid.size(); ++k) {
    sol.pi_slope.push_back(pi_rhs(model, model.grid[k], sol.pi_path[k]));
    sol.sigma_slope.push_back(sigma_rhs(model, model.grid[k], sol.sigma_path[k]));
  }
  return sol;
}

const char* to_string(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::OpenLoop: return "open_loop";
    case TransitionKind::SigmaClosed: return "sigma_closed";
    case TransitionKind::PiClosed: return "pi_closed";
  }
  return "unknown";
}

TransitionFamily::TransitionFamily(TransitionKind kind, TimeGrid grid, MatrixPath fundamental)
    : kind_(kind), grid_(std::move(grid)), fundamental_(std::move(fundamental)) {
  if (fundamental_.size() != grid_.size()) {
    throw Error(ErrorKind::GridMismatch, "fundamental path length differs from grid");
  }
  inverse_.reserve(fundamental_.size());
  condition_.reserve(fundamental_.size());
  for (const Matrix& phi : fundamental_) {
    condition_.push_back(condition_number(phi));
    inverse_.push_back(phi.partialPivLu().inverse());
  }
}

const Matrix& TransitionFamily::inverse(std::size_t k) const {
  if (!(condition_[k] <= kMaxFundamentalCondition)) {
    throw Error(ErrorKind::SingularFundamental,
                std::string(to_string(kind_)) + " fundamental matrix at t = " +
                    std::to_string(grid_[k]) + " has condition number " +
                    std::to_string(condition_[k]));
  }
  return inverse_[k];
}

double TransitionFamily::worst_condition() const noexcept {
  return *std::max_element(condition_.begin(), condition_.end());
}

Matrix TransitionFamily::between(std::size_t i, std::size_t j) const {
  if (i == j) return Matrix::Identity(fundamental_[i].rows(), fundamental_[i].cols());
  return fundamental_[i] * inverse(j);
}

Matrix TransitionFamily::operator()(double s, double t) const {
  return between(grid_.index_of(s), grid_.index_of(t));
}

TransitionFamily build_transition(const LtvModel& model, const RiccatiSolution& riccati,
                                  TransitionKind kind) {
  const auto n = model.n();
  const Matrix I = Matrix::Identity(n, n);
  switch (kind) {
    case TransitionKind::OpenLoop: {
      auto path = rk4_integrate(
          [&](double t, const Matrix& phi) { return Matrix(model.F.at(t) * phi); }, I,
          model.grid, Direction::Forward);
      return TransitionFamily(kind, model.grid, std::move(path));
    }
    case TransitionKind::PiClosed: {
      auto path = rk4_integrate(
          [&](double t, const Matrix& phi) {
            const Matrix a = model.F.at(t) - riccati.pi_at(t) * model.HtRinvH(t);
            return Matrix(a * phi);
          },
          I, model.grid, Direction::Forward);
      return TransitionFamily(kind, model.grid, std::move(path));
    }
    case TransitionKind::SigmaClosed: {
      // Sigma is only known accurately from T backwards, so integrate
      // Phi(tau, T) backwards and renormalize to Phi(tau, t0).
      auto path = rk4_integrate(
          [&](double t, const Matrix& phi) {
            const Matrix a = model.F.at(t) - model.GQG(t) * riccati.sigma_at(t);
            return Matrix(a * phi);
          },
          I, model.grid, Direction::Backward);
      const double cond = condition_number(path.front());
      if (!(cond <= kMaxFundamentalCondition)) {
        throw Error(ErrorKind::SingularFundamental,
                    "Phi_{F,Sigma}(t0, T) has condition number " + std::to_string(cond));
      }
      const Matrix inv0 = path.front().partialPivLu().inverse();
      for (Matrix& phi : path) phi = phi * inv0;
      path.front() = I;
      return TransitionFamily(kind, model.grid, std::move(path));
    }
  }
  throw Error(ErrorKind::PreconditionViolation, "unknown transition kind");
}

Matrix transition(const LtvModel& model, const RiccatiSolution& riccati, TransitionKind kind,
                  double s, double t) {
  return build_transition(model, riccati, kind)(s, t);
}

void write_path_csv(std::ostream& os, const TimeGrid& grid, const MatrixPath& path,
                    const std::string& prefix) {
  if (path.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "path length differs from grid");
  }
  std::vector<std::string> header{"t"};
  for (Eigen::Index r = 0; r < path.front().rows(); ++r) {
    for (Eigen::Index c = 0; c < path.front().cols(); ++c) {
      header.push_back(prefix + "_" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  csv::write_row(os, header);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (Eigen::Index r = 0; r < path[k].rows(); ++r) {
      for (Eigen::Index c = 0; c < path[k].cols(); ++c) row.push_back(path[k](r, c));
    }
    csv::write_row(os, row);
  }
}

}  // namespace greenfilter
