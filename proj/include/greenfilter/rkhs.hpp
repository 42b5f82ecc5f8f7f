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
#include <ostream>

#include "greenfilter/kernels.hpp"

namespace greenfilter {

/// A control sampled on the grid with one-sided limits at every node, so that
/// controls with a jump at a grid point integrate exactly panel by panel.
/// Panel [tau_k, tau_k+1] uses right[k] and left[k+1].
struct ControlPath {
  VectorPath left;
  VectorPath right;

  static ControlPath continuous(VectorPath values);
  static ControlPath zero(std::size_t points, Eigen::Index dim);
  std::size_t size() const noexcept { return right.size(); }
};

/// Integral of <a, W b> over the grid, panel by panel.
double control_inner(const ControlPath& a, const ControlPath& b, const TimeGrid& grid,
                     const MatrixPath* weight = nullptr);

/// Element of the trajectory space: x with its minimal-norm representative
///   dx/dtau = F x + G Q^1/2 u,   x(t0) = Pi0^1/2 xi.
struct TrajectoryElement {
  struct Representative {
    Vector xi;
    ControlPath u;
  };
  TimeGrid grid;
  VectorPath x_path;
  std::optional<Representative> rep;

  const Representative& representative() const;
  TrajectoryElement& operator+=(const TrajectoryElement& other);
  TrajectoryElement& operator*=(double a);
};

TrajectoryElement operator+(TrajectoryElement a, const TrajectoryElement& b);
TrajectoryElement operator*(double a, TrajectoryElement x);

/// Element of the information space: lambda with its representative
///   -dlambda/dt = F* lambda + H* v,   lambda(T) = SigmaT^1/2 z.
struct InformationElement {
  struct Representative {
    Vector z;
    ControlPath v;
  };
  TimeGrid grid;
  VectorPath lambda_path;
  std::optional<Representative> rep;

  const Representative& representative() const;
  InformationElement& operator+=(const InformationElement& other);
  InformationElement& operator*=(double a);
};

InformationElement operator+(InformationElement a, const InformationElement& b);
InformationElement operator*(double a, InformationElement x);

/// x(s) = K(s,t|T) z with its closed-form representative.
TrajectoryElement kernel_section(const KernelField& field, double t, const Vector& z);
/// lambda(s) = Lambda(s,t|T) z with its closed-form representative.
InformationElement lambda_section(const KernelField& field, double t, const Vector& z);

/// Integrates the dynamics from (xi, u) after projecting both onto the
/// minimal-norm subspaces (range of Pi0^1/2, row space of G Q^1/2).
TrajectoryElement make_trajectory(const LtvModel& model, const Vector& xi, const VectorPath& u);
/// Same for (z, v): z onto the range of SigmaT^1/2, v onto the R-weighted
/// complement of Ker H*.
InformationElement make_information(const LtvModel& model, const Vector& z, const VectorPath& v);

double inner_product_x(const TrajectoryElement& a, const TrajectoryElement& b,
                       const LtvModel& model);
double inner_product_lambda(const InformationElement& a, const InformationElement& b,
                            const LtvModel& model);

/// x_hat(s) = integral of K(s,t|T) H* R^-1 y_tilde(t) dt, with the superposed
/// representative. O(grid) in time and memory.
TrajectoryElement smooth_kernel(const KernelField& field, const VectorPath& y_tilde);

enum class PrimalForm {
  Expanded,  ///< |R^-1/2 y|^2 + |x|^2 - 2 <H* R^-1 y, x>
  Residual,  ///< |y - H x|^2_{R^-1} + |x|^2 - |H x|^2_{R^-1}
};

double primal_objective(const TrajectoryElement& x, const VectorPath& y_tilde,
                        const LtvModel& model, PrimalForm form = PrimalForm::Expanded);

/// Per-point split R^-1 y = v_H + v_K with R v_H in Im H and v_K in Ker H*.
struct ObservationSplit {
  VectorPath v_image;
  VectorPath v_kernel;
};

ObservationSplit split_observation(const LtvModel& model, const VectorPath& y_tilde);

InformationElement dual_from_primal(const TrajectoryElement& x_hat, const VectorPath& y_tilde,
                                    const LtvModel& model);

double dual_objective(const InformationElement& lam, const VectorPath& y_tilde,
                      const LtvModel& model);

/// Max over panels of |-dlambda/dt - F* lambda + H* R^-1 (H x - y)|, with the
/// derivative taken as a panel difference and the rest as panel averages,
/// relative to 1 + max |H* v|.
double stationarity_residual(const InformationElement& lam, const TrajectoryElement& x_hat,
                             const VectorPath& y_tilde, const LtvModel& model);

/// Time-reversed model whose K kernel is Lambda of the original:
/// Lambda(s,t) = K'(T + t0 - s, T + t0 - t).
LtvModel mirror_model(const LtvModel& model);

void write_element_csv(std::ostream& os, const TrajectoryElement& x);
void write_element_csv(std::ostream& os, const InformationElement& lam);

}  // namespace greenfilter
