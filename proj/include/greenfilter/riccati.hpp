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

#include <ostream>

#include "greenfilter/model.hpp"

namespace greenfilter {

/// Right-hand side of the forward filter Riccati equation
///   dPi/dt = F Pi + Pi F* - Pi H* R^-1 H Pi + G Q G*.
Matrix pi_rhs(const LtvModel& model, double t, const Matrix& pi);

/// Time derivative of the backward information Riccati equation
///   -dSigma/dt = Sigma F + F* Sigma - Sigma G Q G* Sigma + H* R^-1 H.
Matrix sigma_rhs(const LtvModel& model, double t, const Matrix& sigma);

/// Forward filter covariance Pi(t), Pi(t0) = Pi0.
MatrixPath solve_pi(const LtvModel& model);

/// Backward information matrix Sigma(t), Sigma(T) = SigmaT.
MatrixPath solve_sigma(const LtvModel& model);

/// Both Riccati paths with their slopes, so they can be evaluated between
/// grid points by cubic Hermite interpolation (fourth-order accurate).
struct RiccatiSolution {
  TimeGrid grid;
  MatrixPath pi_path;
  MatrixPath sigma_path;
  MatrixPath pi_slope;
  MatrixPath sigma_slope;

  Matrix pi_at(double t) const;
  Matrix sigma_at(double t) const;
};

RiccatiSolution solve_riccati(const LtvModel& model);

enum class TransitionKind {
  OpenLoop,     ///< Phi_F: d/dtau Phi = F Phi
  SigmaClosed,  ///< Phi_{F,Sigma}: d/dtau Phi = (F - G Q G* Sigma) Phi
  PiClosed,     ///< Phi_{F,Pi}: d/dtau Phi = (F - Pi H* R^-1 H) Phi
};

const char* to_string(TransitionKind kind);

/// Fundamental solutions Phi(tau_k, t0) on the grid. Any pair is recovered as
/// Phi(s, t) = Phi(s, t0) Phi(t, t0)^-1.
class TransitionFamily {
 public:
  TransitionFamily(TransitionKind kind, TimeGrid grid, MatrixPath fundamental);

  TransitionKind kind() const noexcept { return kind_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const MatrixPath& fundamental() const noexcept { return fundamental_; }
  const Matrix& fundamental(std::size_t k) const { return fundamental_[k]; }
  /// Phi(tau_k, t0)^-1; throws SingularFundamental if badly conditioned.
  const Matrix& inverse(std::size_t k) const;
  double condition(std::size_t k) const { return condition_[k]; }
  double worst_condition() const noexcept;

  /// Phi(tau_i, tau_j); identity when i == j.
  Matrix between(std::size_t i, std::size_t j) const;
  Matrix operator()(double s, double t) const;

 private:
  TransitionKind kind_;
  TimeGrid grid_;
  MatrixPath fundamental_;
  MatrixPath inverse_;
  std::vector<double> condition_;
};

inline constexpr double kMaxFundamentalCondition = 1e12;

TransitionFamily build_transition(const LtvModel& model, const RiccatiSolution& riccati,
                                  TransitionKind kind);

/// Convenience form: builds the family and evaluates Phi_kind(s, t).
Matrix transition(const LtvModel& model, const RiccatiSolution& riccati, TransitionKind kind,
                  double s, double t);

/// CSV with columns t, then the row-major entries of each matrix.
void write_path_csv(std::ostream& os, const TimeGrid& grid, const MatrixPath& path,
                    const std::string& prefix);

}  // namespace greenfilter
