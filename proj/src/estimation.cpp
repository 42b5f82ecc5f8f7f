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
#include "greenfilter/estimation.hpp"

#include <cmath>

#include "greenfilter/csv.hpp"

namespace greenfilter {

VectorPath ObservationPath::increments() const {
  VectorPath dy(y.size() - 1);
  for (std::size_t k = 0; k + 1 < y.size(); ++k) dy[k] = y[k + 1] - y[k];
  return dy;
}

ObservationPath read_observations(std::istream& is, const LtvModel& model) {
  const csv::Table table = csv::read_table(is);
  const auto m = static_cast<std::size_t>(model.m());
  if (table.header.size() != m + 1) {
    throw Error(ErrorKind::ParseError, "observation CSV needs t plus " + std::to_string(m) +
                                           " columns, got " +
                                           std::to_string(table.header.size()));
  }
  if (table.rows.size() != model.grid.size()) {
    throw Error(ErrorKind::GridMismatch, "observation CSV has " +
                                             std::to_string(table.rows.size()) +
                                             " rows, grid has " +
                                             std::to_string(model.grid.size()));
  }
  ObservationPath obs{model.grid, VectorPath(model.grid.size())};
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    if (model.grid.index_of(row[0]) != k) {
      throw Error(ErrorKind::GridMismatch, "observation time " + csv::format_double(row[0]) +
                                               " does not match grid point " +
                                               std::to_string(k));
    }
    obs.y[k] = Eigen::Map<const Vector>(row.data() + 1, static_cast<Eigen::Index>(m));
    if (!obs.y[k].allFinite()) {
      throw Error(ErrorKind::NonFiniteState, "observation at row " + std::to_string(k));
    }
  }
  return obs;
}

void write_observations(std::ostream& os, const ObservationPath& obs) {
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < obs.y.front().size(); ++i) header.push_back("y_" + std::to_string(i));
  csv::write_row(os, header);
  for (std::size_t k = 0; k < obs.y.size(); ++k) {
    std::vector<double> row{obs.grid[k]};
    for (Eigen::Index i = 0; i < obs.y[k].size(); ++i) row.push_back(obs.y[k](i));
    csv::write_row(os, row);
  }
}

MeanPaths mean_paths(const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  const auto x = rk4_integrate(
      [&](double t, const Matrix& state) {
        return Matrix(model.F.at(t) * state + model.f.at(t));
      },
      Matrix(model.x0), grid, Direction::Forward);
  MeanPaths out;
  out.x_bar = to_vector_path(x);
  MatrixPath rate(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rate[k] = model.H.at(grid[k]) * out.x_bar[k] + model.h.at(grid[k]);
  }
  const MatrixPath integral = cumulative_trapezoid(rate, grid);
  out.y_bar.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out.y_bar[k] = model.y0 + integral[k].col(0);
  return out;
}

InnovationSmoother::InnovationSmoother(const LtvModel& model, const RiccatiSolution& riccati)
    : model_(&model), means_(mean_paths(model)) {
  const TimeGrid& grid = model.grid;
  const Eigen::Index n = model.n();
  const TransitionFamily xi = build_transition(model, riccati, TransitionKind::PiClosed);
  const std::size_t N = grid.n_steps();
  phi_.resize(N);
  phi_t_.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    phi_[k] = xi.between(k + 1, k);
    phi_t_[k] = phi_[k].transpose();
  }
  pi_ = riccati.pi_path;
  gain_.resize(grid.size());
  pi_gain_.resize(grid.size());
  drift_.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    gain_[k] = model.HtRinv(t);
    pi_gain_[k] = pi_[k] * gain_[k];
    drift_[k] = model.H.at(t) * means_.x_bar[k] + model.h.at(t).col(0);
  }
  // Simpson over each panel; the midpoint transition comes from a half-step RK4.
  const double h = grid.step();
  auto closed_loop = [&](double t) -> Matrix {
    return model.F.at(t) - riccati.pi_at(t) * model.HtRinvH(t);
  };
  drain_.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double t = grid[k];
    const double q = 0.5 * h;
    const Matrix a0 = closed_loop(t);
    const Matrix a1 = closed_loop(t + 0.5 * q);
    const Matrix a2 = closed_loop(t + q);
    const Matrix k1 = a0;
    const Matrix k2 = a1 * (Matrix::Identity(n, n) + 0.5 * q * k1);
    const Matrix k3 = a1 * (Matrix::Identity(n, n) + 0.5 * q * k2);
    const Matrix k4 = a2 * (Matrix::Identity(n, n) + q * k3);
    const Matrix mid = Matrix::Identity(n, n) + (q / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    drain_[k] = (h / 6.0) * (model.HtRinvH(t) + 4.0 * mid.transpose() * model.HtRinvH(t + q) * mid +
                             phi_t_[k] * model.HtRinvH(grid[k + 1]) * phi_[k]);
  }
}

void InnovationSmoother::center(const VectorPath& dy, VectorPath& dy_tilde) const {
  const double h = model_->grid.step();
  dy_tilde.resize(dy.size());
  for (std::size_t k = 0; k < dy.size(); ++k) {
    dy_tilde[k] = dy[k];
    dy_tilde[k].noalias() -= h * drift_[k];
  }
}

void InnovationSmoother::filter(const VectorPath& dy_tilde, VectorPath& r) const {
  const std::size_t N = phi_.size();
  if (dy_tilde.size() != N) {
    throw Error(ErrorKind::GridMismatch, "filter needs one increment per panel");
  }
  r.resize(N + 1);
  r[0].setZero(model_->n());
  Vector jumped(model_->n());
  for (std::size_t k = 0; k < N; ++k) {
    jumped = r[k];
    jumped.noalias() += pi_gain_[k] * dy_tilde[k];
    r[k + 1].resize(jumped.size());
    r[k + 1].noalias() = phi_[k] * jumped;
  }
}

void InnovationSmoother::smooth(const VectorPath& dy_tilde, const VectorPath& r,
                                VectorPath& adjoint, VectorPath& out) const {
  const std::size_t N = phi_.size();
  if (dy_tilde.size() != N || r.size() != N + 1) {
    throw Error(ErrorKind::GridMismatch, "smoother inputs do not match the grid");
  }
  const auto n = model_->n();
  adjoint.resize(N + 1);
  out.resize(N + 1);
  adjoint[N].setZero(n);
  out[N] = r[N];
  Vector r_plus(n);
  for (std::size_t j = N; j-- > 0;) {
    // a_j = Phi*(a_j+1) + L_j dy_j - D_j r_j^+, with r_j^+ = r_j + Pi_j L_j dy_j
    adjoint[j].resize(n);
    adjoint[j].noalias() = phi_t_[j] * adjoint[j + 1];
    adjoint[j].noalias() += gain_[j] * dy_tilde[j];
    r_plus = r[j];
    r_plus.noalias() += pi_gain_[j] * dy_tilde[j];
    adjoint[j].noalias() -= drain_[j] * r_plus;
    out[j] = r[j];
    out[j].noalias() += pi_[j] * adjoint[j];
  }
}

FilterResult kalman_filter(const LtvModel& model, const RiccatiSolution& riccati,
                           const ObservationPath& obs) {
  if (!(obs.grid == model.grid) || obs.y.size() != model.grid.size()) {
    throw Error(ErrorKind::GridMismatch, "observations are not on the model grid");
  }
  const InnovationSmoother plan(model, riccati);
  FilterResult out;
  const VectorPath dy = obs.increments();
  plan.center(dy, out.centered_increments);
  plan.filter(out.centered_increments, out.r_path);
  const TimeGrid& grid = model.grid;
  out.filtered.resize(grid.size());
  out.innovation.resize(grid.size());
  out.innovation[0] = obs.y[0];
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.filtered[k] = plan.means().x_bar[k] + out.r_path[k];
    if (k + 1 < grid.size()) {
      const Vector rate = model.H.at(grid[k]) * out.filtered[k] + model.h.at(grid[k]).col(0);
      out.innovation[k + 1] = out.innovation[k] + dy[k] - grid.step() * rate;
    }
  }
  return out;
}

VectorPath rts_smooth(const LtvModel& model, const RiccatiSolution& riccati,
                      const FilterResult& filtered) {
  const TimeGrid& grid = model.grid;
  if (filtered.filtered.size() != grid.size() || filtered.r_path.size() != grid.size() ||
      filtered.centered_increments.size() != grid.n_steps()) {
    throw Error(ErrorKind::GridMismatch, "filter outputs are not on the model grid");
  }
  const InnovationSmoother plan(model, riccati);
  VectorPath adjoint;
  VectorPath out;
  plan.smooth(filtered.centered_increments, filtered.r_path, adjoint, out);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] += plan.means().x_bar[k];
  return out;
}

VectorPath smooth_via_kernel_route(const LtvModel& model, const KernelField& field,
                                   const ObservationPath& obs) {
  if (!field.sigma_terminal_zero()) {
    throw Error(ErrorKind::PreconditionViolation,
                "kernel-route smoother requires SigmaT = 0 (terminal information weight)");
  }
  if (!(obs.grid == model.grid)) {
    throw Error(ErrorKind::GridMismatch, "observations are not on the model grid");
  }
  const MeanPaths means = mean_paths(model);
  const TimeGrid& grid = model.grid;
  const VectorPath dy = obs.increments();
  VectorPath c(grid.size(), Vector::Zero(model.n()));
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid[k];
    const Vector dy_tilde =
        dy[k] - grid.step() * (model.H.at(t) * means.x_bar[k] + model.h.at(t).col(0));
    c[k] = model.HtRinv(t) * dy_tilde;
  }
  VectorPath out = field.superpose(c);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] += means.x_bar[k];
  return out;
}

Matrix optimal_gain(const KernelField& field, double s, double t) {
  if (!field.sigma_terminal_zero()) {
    throw Error(ErrorKind::PreconditionViolation,
                "optimal gain requires SigmaT = 0 (terminal information weight)");
  }
  return kernel_K(field, s, t) * field.model().HtRinv(t);
}

SmootherResult run_smoother(const KernelField& field, const ObservationPath& obs) {
  const LtvModel& model = field.model();
  SmootherResult out;
  FilterResult f = kalman_filter(model, field.riccati(), obs);
  out.smoothed = rts_smooth(model, field.riccati(), f);
  const MeanPaths means = mean_paths(model);
  out.mean_x = means.x_bar;
  out.mean_y = means.y_bar;
  out.filtered = std::move(f.filtered);
  out.r_path = std::move(f.r_path);
  out.innovation = std::move(f.innovation);
  out.smoothed_cov_diag.resize(model.grid.size());
  for (std::size_t k = 0; k < model.grid.size(); ++k) {
    out.smoothed_cov_diag[k] = field.K(k, k).diagonal();
  }
  return out;
}

void write_smoother_csv(std::ostream& os, const TimeGrid& grid, const SmootherResult& result) {
  const auto n = result.filtered.front().size();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("filtered_" + std::to_string(i));
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("smoothed_" + std::to_string(i));
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("K_diag_" + std::to_string(i));
  csv::write_row(os, header);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(result.filtered[k](i));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(result.smoothed[k](i));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(result.smoothed_cov_diag[k](i));
    csv::write_row(os, row);
  }
}

}  // namespace greenfilter
