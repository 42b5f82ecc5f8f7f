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

#include <istream>
#include <ostream>

#include "greenfilter/kernels.hpp"

namespace greenfilter {

/// Cumulative observation process y(tau_k) on the model grid.
struct ObservationPath {
  TimeGrid grid;
  VectorPath y;

  /// y(tau_k+1) - y(tau_k), one per panel.
  VectorPath increments() const;
};

/// Reads columns t, y_0 .. y_{m-1}; times must match the model grid.
ObservationPath read_observations(std::istream& is, const LtvModel& model);
void write_observations(std::ostream& os, const ObservationPath& obs);

struct MeanPaths {
  VectorPath x_bar;
  VectorPath y_bar;
};

/// dx/dt = F x + f from x0 (RK4); y_bar = y0 + integral of H x_bar + h.
MeanPaths mean_paths(const LtvModel& model);

struct FilterResult {
  VectorPath filtered;             ///< x_hat(tau_k | tau_k)
  VectorPath r_path;               ///< filtered - x_bar
  VectorPath innovation;           ///< e(tau_k)
  VectorPath centered_increments;  ///< one per panel
};

/// Per-step matrices shared by the filter, the smoother and Monte Carlo.
/// All recursions write into caller-owned buffers and do not allocate.
class InnovationSmoother {
 public:
  InnovationSmoother(const LtvModel& model, const RiccatiSolution& riccati);

  const LtvModel& model() const noexcept { return *model_; }
  const MeanPaths& means() const noexcept { return means_; }
  std::size_t steps() const noexcept { return phi_.size(); }

  /// dy_tilde_k = dy_k - (H x_bar + h)(tau_k) h.
  void center(const VectorPath& dy, VectorPath& dy_tilde) const;
  /// r_k+1 = Phi_{F,Pi}(tau_k+1, tau_k) (r_k + Pi_k H* R^-1 dy_tilde_k), r_0 = 0.
  void filter(const VectorPath& dy_tilde, VectorPath& r) const;
  /// Backward adjoint pass; writes x_hat(s|T) - x_bar(s) into `out`.
  void smooth(const VectorPath& dy_tilde, const VectorPath& r, VectorPath& adjoint,
              VectorPath& out) const;

 private:
  const LtvModel* model_;
  MeanPaths means_;
  MatrixPath phi_;      // Phi_{F,Pi}(tau_k+1, tau_k)
  MatrixPath phi_t_;    // its transpose
  MatrixPath pi_;       // Pi(tau_k)
  MatrixPath gain_;     // H* R^-1 (tau_k)
  MatrixPath pi_gain_;  // Pi H* R^-1 (tau_k)
  MatrixPath drain_;    // panel integral of Phi* H* R^-1 H Phi, Phi = Phi_{F,Pi}(t, tau_k)
  VectorPath drift_;    // (H x_bar + h)(tau_k)
};

FilterResult kalman_filter(const LtvModel& model, const RiccatiSolution& riccati,
                           const ObservationPath& obs);

VectorPath rts_smooth(const LtvModel& model, const RiccatiSolution& riccati,
                      const FilterResult& filtered);

/// x_bar(s) + sum_k K(s, tau_k|T) H* R^-1 dy_tilde_k. Needs SigmaT = 0.
VectorPath smooth_via_kernel_route(const LtvModel& model, const KernelField& field,
                                   const ObservationPath& obs);

/// K(s,t|T) H*(t) R^-1(t). Needs SigmaT = 0.
Matrix optimal_gain(const KernelField& field, double s, double t);

struct SmootherResult {
  VectorPath mean_x;
  VectorPath mean_y;
  VectorPath filtered;
  VectorPath r_path;
  VectorPath innovation;
  VectorPath smoothed;
  VectorPath smoothed_cov_diag;
};

SmootherResult run_smoother(const KernelField& field, const ObservationPath& obs);

/// Columns t, filtered, smoothed, diag K(s,s|T).
void write_smoother_csv(std::ostream& os, const TimeGrid& grid, const SmootherResult& result);

}  // namespace greenfilter
