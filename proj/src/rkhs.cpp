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
#include "greenfilter/rkhs.hpp"

#include <algorithm>
#include <cmath>

#include "greenfilter/csv.hpp"

namespace greenfilter {

namespace {

void require_grid(const TimeGrid& grid, std::size_t size, const char* what) {
  if (size != grid.size()) {
    throw Error(ErrorKind::GridMismatch,
                std::string(what) + " has " + std::to_string(size) + " points, grid has " +
                    std::to_string(grid.size()));
  }
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
  if (!(a == b)) throw Error(ErrorKind::GridMismatch, "elements live on different grids");
}

Matrix inv_sqrt(const Matrix& spd) {
  return psd_sqrt(spd).partialPivLu().inverse();
}

/// Orthogonal projector onto the row space of a.
Matrix row_projector(const Matrix& a) { return pinv(a) * a; }

double path_inner(const VectorPath& a, const VectorPath& b, const TimeGrid& grid,
                  const MatrixPath& weight) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    acc += a[k].dot(weight[k] * b[k]) + a[k + 1].dot(weight[k + 1] * b[k + 1]);
  }
  return 0.5 * grid.step() * acc;
}

MatrixPath sample(const TimeGrid& grid, const std::function<Matrix(double)>& fn) {
  MatrixPath out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = fn(grid[k]);
  return out;
}

}  // namespace

ControlPath ControlPath::continuous(VectorPath values) {
  ControlPath c;
  c.left = values;
  c.right = std::move(values);
  return c;
}

ControlPath ControlPath::zero(std::size_t points, Eigen::Index dim) {
  return continuous(VectorPath(points, Vector::Zero(dim)));
}

double control_inner(const ControlPath& a, const ControlPath& b, const TimeGrid& grid,
                     const MatrixPath* weight) {
  require_grid(grid, a.size(), "control");
  require_grid(grid, b.size(), "control");
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (weight) {
      acc += a.right[k].dot((*weight)[k] * b.right[k]) +
             a.left[k + 1].dot((*weight)[k + 1] * b.left[k + 1]);
    } else {
      acc += a.right[k].dot(b.right[k]) + a.left[k + 1].dot(b.left[k + 1]);
    }
  }
  return 0.5 * grid.step() * acc;
}

namespace {

void add_scaled(ControlPath& dst, const ControlPath& src, double a) {
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst.left[k] += a * src.left[k];
    dst.right[k] += a * src.right[k];
  }
}

void add_scaled(VectorPath& dst, const VectorPath& src, double a) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += a * src[k];
}

void scale(ControlPath& c, double a) {
  for (std::size_t k = 0; k < c.size(); ++k) {
    c.left[k] *= a;
    c.right[k] *= a;
  }
}

void scale(VectorPath& p, double a) {
  for (Vector& v : p) v *= a;
}

}  // namespace

const TrajectoryElement::Representative& TrajectoryElement::representative() const {
  if (!rep) throw Error(ErrorKind::MissingRepresentative, "trajectory has no representative");
  return *rep;
}

TrajectoryElement& TrajectoryElement::operator+=(const TrajectoryElement& other) {
  require_same_grid(grid, other.grid);
  add_scaled(x_path, other.x_path, 1.0);
  if (rep && other.rep) {
    rep->xi += other.rep->xi;
    add_scaled(rep->u, other.rep->u, 1.0);
  } else {
    rep.reset();
  }
  return *this;
}

TrajectoryElement& TrajectoryElement::operator*=(double a) {
  scale(x_path, a);
  if (rep) {
    rep->xi *= a;
    scale(rep->u, a);
  }
  return *this;
}

TrajectoryElement operator+(TrajectoryElement a, const TrajectoryElement& b) { return a += b; }
TrajectoryElement operator*(double a, TrajectoryElement x) { return x *= a; }

const InformationElement::Representative& InformationElement::representative() const {
  if (!rep) {
    throw Error(ErrorKind::MissingRepresentative, "information vector has no representative");
  }
  return *rep;
}

InformationElement& InformationElement::operator+=(const InformationElement& other) {
  require_same_grid(grid, other.grid);
  add_scaled(lambda_path, other.lambda_path, 1.0);
  if (rep && other.rep) {
    rep->z += other.rep->z;
    add_scaled(rep->v, other.rep->v, 1.0);
  } else {
    rep.reset();
  }
  return *this;
}

InformationElement& InformationElement::operator*=(double a) {
  scale(lambda_path, a);
  if (rep) {
    rep->z *= a;
    scale(rep->v, a);
  }
  return *this;
}

InformationElement operator+(InformationElement a, const InformationElement& b) { return a += b; }
InformationElement operator*(double a, InformationElement x) { return x *= a; }

TrajectoryElement kernel_section(const KernelField& field, double t, const Vector& z) {
  const LtvModel& model = field.model();
  const TimeGrid& grid = field.grid();
  const std::size_t j = grid.index_of(t);
  const auto& sigma = field.riccati().sigma_path;
  const TransitionFamily& psi = field.sigma_closed();
  const Vector psi_t_z = psi.fundamental(j).transpose() * z;

  TrajectoryElement x{grid, VectorPath(grid.size()), TrajectoryElement::Representative{}};
  ControlPath& u = x.rep->u;
  u.left.resize(grid.size());
  u.right.resize(grid.size());
  Vector nu_left_t0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    x.x_path[k] = field.K(k, j) * z;
    const Vector nu_after = sigma[k] * x.x_path[k];
    // nu(tau) = Sigma K z - Phi_{F,Sigma}*(t, tau) z for tau < t
    const Vector nu_before = nu_after - psi.inverse(k).transpose() * psi_t_z;
    const Matrix gain = psd_sqrt(model.Q.at(grid[k])) * model.G.at(grid[k]).transpose();
    u.left[k] = -gain * (k <= j ? nu_before : nu_after);
    u.right[k] = -gain * (k < j ? nu_before : nu_after);
    if (k == 0) nu_left_t0 = nu_before;
  }
  x.rep->xi = -psd_sqrt(model.Pi0) * nu_left_t0;
  return x;
}

InformationElement lambda_section(const KernelField& field, double t, const Vector& z) {
  const LtvModel& model = field.model();
  const TimeGrid& grid = field.grid();
  const std::size_t j = grid.index_of(t);
  const auto& pi = field.riccati().pi_path;
  const TransitionFamily& xi = field.pi_closed();
  const Vector xi_t_inv_z = xi.inverse(j) * z;

  InformationElement lam{grid, VectorPath(grid.size()), InformationElement::Representative{}};
  ControlPath& v = lam.rep->v;
  v.left.resize(grid.size());
  v.right.resize(grid.size());
  Vector mu_right_T;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    lam.lambda_path[k] = field.Lambda(k, j) * z;
    const Vector mu_before = -pi[k] * lam.lambda_path[k];
    // mu(tau) gains Phi_{F,Pi}(tau, t) z for tau > t
    const Vector mu_after = mu_before + xi.fundamental(k) * xi_t_inv_z;
    const Matrix gain = model.Rinv(grid[k]) * model.H.at(grid[k]);
    v.left[k] = gain * (k > j ? mu_after : mu_before);
    v.right[k] = gain * (k >= j ? mu_after : mu_before);
    if (k + 1 == grid.size()) mu_right_T = mu_after;
  }
  lam.rep->z = psd_sqrt(model.SigmaT) * mu_right_T;
  return lam;
}

TrajectoryElement make_trajectory(const LtvModel& model, const Vector& xi, const VectorPath& u) {
  const TimeGrid& grid = model.grid;
  require_grid(grid, u.size(), "control path");
  const Matrix p0 = psd_sqrt(model.Pi0);
  TrajectoryElement x{grid, {}, TrajectoryElement::Representative{}};
  x.rep->xi = row_projector(p0) * xi;
  VectorPath u_min(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix b = model.G.at(grid[k]) * psd_sqrt(model.Q.at(grid[k]));
    u_min[k] = row_projector(b) * u[k];
  }
  const auto path = rk4_integrate(
      [&](double t, const Matrix& state) {
        const Matrix b = model.G.at(t) * psd_sqrt(model.Q.at(t));
        return Matrix(model.F.at(t) * state + b * interpolate_path(u_min, grid, t));
      },
      Matrix(p0 * x.rep->xi), grid, Direction::Forward);
  x.x_path = to_vector_path(path);
  x.rep->u = ControlPath::continuous(std::move(u_min));
  return x;
}

InformationElement make_information(const LtvModel& model, const Vector& z,
                                    const VectorPath& v) {
  const TimeGrid& grid = model.grid;
  require_grid(grid, v.size(), "control path");
  const Matrix sT = psd_sqrt(model.SigmaT);
  InformationElement lam{grid, {}, InformationElement::Representative{}};
  lam.rep->z = row_projector(sT) * z;
  VectorPath v_min(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix r_inv_half = inv_sqrt(model.R.at(grid[k]));
    const Matrix a = model.H.at(grid[k]).transpose() * r_inv_half;
    v_min[k] = r_inv_half * pinv(a) * model.H.at(grid[k]).transpose() * v[k];
  }
  const auto path = rk4_integrate(
      [&](double t, const Matrix& state) {
        return Matrix(-(model.F.at(t).transpose() * state +
                        model.H.at(t).transpose() * interpolate_path(v_min, grid, t)));
      },
      Matrix(sT * lam.rep->z), grid, Direction::Backward);
  lam.lambda_path = to_vector_path(path);
  lam.rep->v = ControlPath::continuous(std::move(v_min));
  return lam;
}

double inner_product_x(const TrajectoryElement& a, const TrajectoryElement& b,
                       const LtvModel& model) {
  require_same_grid(a.grid, b.grid);
  require_same_grid(a.grid, model.grid);
  const auto& ra = a.representative();
  const auto& rb = b.representative();
  const MatrixPath M = sample(model.grid, [&](double t) { return model.HtRinvH(t); });
  return ra.xi.dot(rb.xi) + a.x_path.back().dot(model.SigmaT * b.x_path.back()) +
         control_inner(ra.u, rb.u, model.grid) + path_inner(a.x_path, b.x_path, model.grid, M);
}

double inner_product_lambda(const InformationElement& a, const InformationElement& b,
                            const LtvModel& model) {
  require_same_grid(a.grid, b.grid);
  require_same_grid(a.grid, model.grid);
  const auto& ra = a.representative();
  const auto& rb = b.representative();
  const MatrixPath W = sample(model.grid, [&](double t) { return model.GQG(t); });
  const MatrixPath R = sample(model.grid, [&](double t) { return model.R.at(t); });
  return a.lambda_path.front().dot(model.Pi0 * b.lambda_path.front()) + ra.z.dot(rb.z) +
         path_inner(a.lambda_path, b.lambda_path, model.grid, W) +
         control_inner(ra.v, rb.v, model.grid, &R);
}

TrajectoryElement smooth_kernel(const KernelField& field, const VectorPath& y_tilde) {
  const LtvModel& model = field.model();
  const TimeGrid& grid = field.grid();
  require_grid(grid, y_tilde.size(), "observation path");
  const auto n = model.n();
  const std::size_t N = grid.size();
  const TransitionFamily& psi = field.sigma_closed();
  const auto w = grid.trapezoid_weights();

  VectorPath c(N);
  VectorPath a(N);
  for (std::size_t k = 0; k < N; ++k) {
    c[k] = w[k] * (model.HtRinv(grid[k]) * y_tilde[k]);
    a[k] = psi.fundamental(k).transpose() * c[k];
  }
  VectorPath suffix(N + 1, Vector::Zero(n));
  for (std::size_t k = N; k-- > 0;) suffix[k] = suffix[k + 1] + a[k];

  TrajectoryElement x{grid, field.superpose(c), TrajectoryElement::Representative{}};
  ControlPath& u = x.rep->u;
  u.left.resize(N);
  u.right.resize(N);
  const auto& sigma = field.riccati().sigma_path;
  for (std::size_t j = 0; j < N; ++j) {
    const Matrix gain = psd_sqrt(model.Q.at(grid[j])) * model.G.at(grid[j]).transpose();
    const Vector base = sigma[j] * x.x_path[j];
    const Matrix back = psi.inverse(j).transpose();
    u.right[j] = -gain * (base - back * suffix[j + 1]);
    u.left[j] = -gain * (base - back * suffix[j]);
  }
  x.rep->xi = psd_sqrt(model.Pi0) * (suffix[0] - sigma.front() * x.x_path.front());
  return x;
}

double primal_objective(const TrajectoryElement& x, const VectorPath& y_tilde,
                        const LtvModel& model, PrimalForm form) {
  const TimeGrid& grid = model.grid;
  require_same_grid(x.grid, grid);
  require_grid(grid, y_tilde.size(), "observation path");
  const double norm_sq = inner_product_x(x, x, model);
  const MatrixPath r_inv = sample(grid, [&](double t) { return model.Rinv(t); });
  VectorPath hx(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) hx[k] = model.H.at(grid[k]) * x.x_path[k];
  if (form == PrimalForm::Expanded) {
    return path_inner(y_tilde, y_tilde, grid, r_inv) + norm_sq -
           2.0 * path_inner(y_tilde, hx, grid, r_inv);
  }
  VectorPath resid(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) resid[k] = y_tilde[k] - hx[k];
  return path_inner(resid, resid, grid, r_inv) + norm_sq - path_inner(hx, hx, grid, r_inv);
}

ObservationSplit split_observation(const LtvModel& model, const VectorPath& y_tilde) {
  const TimeGrid& grid = model.grid;
  require_grid(grid, y_tilde.size(), "observation path");
  ObservationSplit split{VectorPath(grid.size()), VectorPath(grid.size())};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix r_inv_half = inv_sqrt(model.R.at(grid[k]));
    const Matrix a = r_inv_half * model.H.at(grid[k]);
    const Matrix proj = a * pinv(a);
    const Matrix defect = proj * proj - proj;
    if (!proj.allFinite() || (defect.size() && defect.cwiseAbs().maxCoeff() > 1e-8)) {
      throw Error(ErrorKind::ProjectionFailure,
                  "weighted projection onto Im H failed at t = " + std::to_string(grid[k]));
    }
    const Vector w = r_inv_half * y_tilde[k];
    split.v_image[k] = r_inv_half * (proj * w);
    split.v_kernel[k] = r_inv_half * (w - proj * w);
  }
  return split;
}

InformationElement dual_from_primal(const TrajectoryElement& x_hat, const VectorPath& y_tilde,
                                    const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  require_same_grid(x_hat.grid, grid);
  const ObservationSplit split = split_observation(model, y_tilde);
  VectorPath v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    v[k] = -model.Rinv(grid[k]) * model.H.at(grid[k]) * x_hat.x_path[k] + split.v_image[k];
  }
  const Matrix sT_half = psd_sqrt(model.SigmaT);
  InformationElement lam{grid, {}, InformationElement::Representative{}};
  lam.rep->z = -sT_half * x_hat.x_path.back();
  const auto path = rk4_integrate(
      [&](double t, const Matrix& state) {
        return Matrix(-(model.F.at(t).transpose() * state +
                        model.H.at(t).transpose() * interpolate_path(v, grid, t)));
      },
      Matrix(sT_half * lam.rep->z), grid, Direction::Backward);
  lam.lambda_path = to_vector_path(path);
  lam.rep->v = ControlPath::continuous(std::move(v));
  return lam;
}

double dual_objective(const InformationElement& lam, const VectorPath& y_tilde,
                      const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  require_same_grid(lam.grid, grid);
  const ObservationSplit split = split_observation(model, y_tilde);
  const MatrixPath R = sample(grid, [&](double t) { return model.R.at(t); });
  const ControlPath v_image = ControlPath::continuous(split.v_image);
  return inner_product_lambda(lam, lam, model) -
         2.0 * control_inner(v_image, lam.representative().v, grid, &R) -
         path_inner(split.v_kernel, split.v_kernel, grid, R);
}

double stationarity_residual(const InformationElement& lam, const TrajectoryElement& x_hat,
                             const VectorPath& y_tilde, const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  require_same_grid(lam.grid, grid);
  require_same_grid(x_hat.grid, grid);
  require_grid(grid, y_tilde.size(), "observation path");
  const auto& v = lam.representative().v;
  VectorPath g(grid.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    g[k] = model.F.at(t).transpose() * lam.lambda_path[k] -
           model.HtRinv(t) * (model.H.at(t) * x_hat.x_path[k] - y_tilde[k]);
    scale = std::max(scale, (model.H.at(t).transpose() * v.right[k]).cwiseAbs().maxCoeff());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const Vector resid =
        (lam.lambda_path[k] - lam.lambda_path[k + 1]) / grid.step() - 0.5 * (g[k] + g[k + 1]);
    worst = std::max(worst, resid.cwiseAbs().maxCoeff());
  }
  return worst / (1.0 + scale);
}

namespace {

MatrixSchedule reversed(const MatrixSchedule& s, const TimeGrid& grid,
                        const std::function<Matrix(const Matrix&)>& fn) {
  if (s.is_constant()) return MatrixSchedule::constant(fn(s.constant_value()));
  MatrixPath samples(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    samples[k] = fn(s.at_index(grid.n_steps() - k));
  }
  return MatrixSchedule::tabulated(grid, std::move(samples));
}

/// Combines two schedules sample by sample (constant only when both are).
MatrixSchedule reversed2(const MatrixSchedule& a, const MatrixSchedule& b, const TimeGrid& grid,
                         const std::function<Matrix(const Matrix&, const Matrix&)>& fn) {
  if (a.is_constant() && b.is_constant()) {
    return MatrixSchedule::constant(fn(a.constant_value(), b.constant_value()));
  }
  MatrixPath samples(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const std::size_t src = grid.n_steps() - k;
    samples[k] = fn(a.at_index(src), b.at_index(src));
  }
  return MatrixSchedule::tabulated(grid, std::move(samples));
}

}  // namespace

LtvModel mirror_model(const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  LtvModel m;
  m.grid = grid;
  m.F = reversed(model.F, grid, [](const Matrix& f) { return Matrix(f.transpose()); });
  m.G = reversed2(model.H, model.R, grid, [](const Matrix& h, const Matrix& r) {
    return Matrix(h.transpose() * inv_sqrt(r));
  });
  m.Q = MatrixSchedule::constant(Matrix::Identity(model.m(), model.m()));
  m.H = reversed2(model.G, model.Q, grid, [](const Matrix& g, const Matrix& q) {
    return Matrix(psd_sqrt(q) * g.transpose());
  });
  m.R = MatrixSchedule::constant(Matrix::Identity(model.p(), model.p()));
  m.f = MatrixSchedule::constant(Matrix::Zero(model.n(), 1));
  m.h = MatrixSchedule::constant(Matrix::Zero(model.p(), 1));
  m.x0 = Vector::Zero(model.n());
  m.y0 = Vector::Zero(model.p());
  m.Pi0 = model.SigmaT;
  m.SigmaT = model.Pi0;
  return m;
}

namespace {

void write_rows(std::ostream& os, const TimeGrid& grid, const VectorPath& state,
                const ControlPath* control, const std::string& state_name,
                const std::string& control_name) {
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < state.front().size(); ++i) {
    header.push_back(state_name + "_" + std::to_string(i));
  }
  if (control) {
    for (Eigen::Index i = 0; i < control->right.front().size(); ++i) {
      header.push_back(control_name + "_" + std::to_string(i));
    }
  }
  csv::write_row(os, header);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (Eigen::Index i = 0; i < state[k].size(); ++i) row.push_back(state[k](i));
    if (control) {
      for (Eigen::Index i = 0; i < control->right[k].size(); ++i) {
        row.push_back(control->right[k](i));
      }
    }
    csv::write_row(os, row);
  }
}

}  // namespace

void write_element_csv(std::ostream& os, const TrajectoryElement& x) {
  write_rows(os, x.grid, x.x_path, x.rep ? &x.rep->u : nullptr, "x", "u");
}

void write_element_csv(std::ostream& os, const InformationElement& lam) {
  write_rows(os, lam.grid, lam.lambda_path, lam.rep ? &lam.rep->v : nullptr, "lambda", "v");
}

}  // namespace greenfilter
