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
#include "greenfilter/kernels.hpp"

#include <algorithm>

#include "greenfilter/csv.hpp"

namespace greenfilter {

KernelField::KernelField(LtvModel model) : KernelField(model, solve_riccati(model)) {}

KernelField::KernelField(LtvModel model, RiccatiSolution riccati)
    : model_(std::move(model)),
      riccati_(std::move(riccati)),
      open_loop_(build_transition(model_, riccati_, TransitionKind::OpenLoop)),
      sigma_closed_(build_transition(model_, riccati_, TransitionKind::SigmaClosed)),
      pi_closed_(build_transition(model_, riccati_, TransitionKind::PiClosed)) {
  const auto n = model_.n();
  const TimeGrid& grid = model_.grid;
  const Matrix I = Matrix::Identity(n, n);

  const Matrix p0 = psd_sqrt(model_.Pi0);
  K_prior_ = symmetrize(p0 * (I + p0 * riccati_.sigma_path.front() * p0).ldlt().solve(p0));

  // The running integrals are recovered from the diagonals P(tau) = K(tau,tau)
  // and W(tau) = Lambda(tau,tau), which solve Lyapunov equations that RK4
  // integrates to fourth order:
  //   dP/dtau = A_S P + P A_S* + G Q G*,   P(t0) = K_prior
  //   -dW/dtau = A_P* W + W A_P + H* R^-1 H,   W(T) = B
  const MatrixPath P = rk4_integrate(
      [&](double t, const Matrix& p) {
        const Matrix a = model_.F.at(t) - model_.GQG(t) * riccati_.sigma_at(t);
        const Matrix ap = a * p;
        return Matrix(ap + ap.transpose() + model_.GQG(t));
      },
      K_prior_, grid, Direction::Forward, symmetrize);
  K_running_.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix& inv = sigma_closed_.inverse(k);
    K_running_[k] = symmetrize(inv * P[k] * inv.transpose() - K_prior_);
  }
  K_running_.front().setZero();

  const Matrix sT = psd_sqrt(model_.SigmaT);
  const Matrix B = symmetrize(sT * (I + sT * riccati_.pi_path.back() * sT).ldlt().solve(sT));
  const Matrix& xi_T = pi_closed_.fundamental(grid.n_steps());
  L_terminal_ = symmetrize(xi_T.transpose() * B * xi_T);

  const MatrixPath W = rk4_integrate(
      [&](double t, const Matrix& w) {
        const Matrix a = model_.F.at(t) - riccati_.pi_at(t) * model_.HtRinvH(t);
        const Matrix wa = w * a;
        return Matrix(-(wa + wa.transpose() + model_.HtRinvH(t)));
      },
      B, grid, Direction::Backward, symmetrize);
  L_running_.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix& xi = pi_closed_.fundamental(k);
    (void)pi_closed_.inverse(k);
    L_running_[k] = symmetrize(xi.transpose() * W[k] * xi - L_terminal_);
  }
  L_running_.back().setZero();
}

VectorPath KernelField::superpose(const VectorPath& c) const {
  const std::size_t N = grid().size();
  if (c.size() != N) throw Error(ErrorKind::GridMismatch, "superpose needs one vector per point");
  const auto n = model_.n();
  VectorPath a(N);
  for (std::size_t k = 0; k < N; ++k) a[k] = sigma_closed_.fundamental(k).transpose() * c[k];
  Vector suffix = Vector::Zero(n);
  for (const Vector& ak : a) suffix += ak;
  const Vector prior_term = K_prior_ * suffix;
  Vector running = Vector::Zero(n);
  VectorPath out(N);
  for (std::size_t j = 0; j < N; ++j) {
    running += K_running_[j] * a[j];
    suffix -= a[j];
    out[j] = sigma_closed_.fundamental(j) * (prior_term + running + K_running_[j] * suffix);
  }
  return out;
}

bool KernelField::sigma_terminal_zero() const noexcept {
  return model_.SigmaT.size() == 0 || model_.SigmaT.cwiseAbs().maxCoeff() == 0.0;
}

void KernelField::require_sigma_terminal_zero(const char* what) const {
  if (!sigma_terminal_zero()) {
    throw Error(ErrorKind::PreconditionViolation,
                std::string(what) + " requires SigmaT = 0 (terminal information weight)");
  }
}

Matrix KernelField::K(std::size_t i, std::size_t j) const {
  const std::size_t lo = std::min(i, j);
  return sigma_closed_.fundamental(i) * (K_prior_ + K_running_[lo]) *
         sigma_closed_.fundamental(j).transpose();
}

Matrix KernelField::Lambda(std::size_t i, std::size_t j) const {
  const std::size_t hi = std::max(i, j);
  return pi_closed_.inverse(i).transpose() * (L_terminal_ + L_running_[hi]) *
         pi_closed_.inverse(j);
}

Matrix KernelField::K_bf(std::size_t i, std::size_t j) const {
  require_sigma_terminal_zero("Bryson-Frazier kernel");
  const Matrix& pi_i = riccati_.pi_path[i];
  const Matrix& pi_j = riccati_.pi_path[j];
  Matrix direct = i <= j ? Matrix(pi_i * pi_closed_.between(j, i).transpose())
                         : Matrix(pi_closed_.between(i, j) * pi_j);
  return direct - pi_i * Lambda(i, j) * pi_j;
}

void KernelField::build_hamiltonian() const {
  std::call_once(hamiltonian_once_, [this] {
    const auto n = model_.n();
    const TimeGrid& grid = model_.grid;
    auto hmat = [&](double t) {
      Matrix h(2 * n, 2 * n);
      const Matrix F = model_.F.at(t);
      h << F, -model_.GQG(t), -model_.HtRinvH(t), -F.transpose();
      return h;
    };

    MatrixPath phi_h(grid.size());
    if (model_.time_invariant()) {
      const Matrix h = hmat(grid.t0());
      for (std::size_t k = 0; k < grid.size(); ++k) phi_h[k] = expm((grid.T() - grid[k]) * h);
    } else {
      phi_h = rk4_integrate(
          [&](double t, const Matrix& x) { return Matrix(-x * hmat(t)); },
          Matrix::Identity(2 * n, 2 * n), grid, Direction::Backward);
    }

    auto ham = std::make_shared<Hamiltonian>();
    ham->phi22.resize(grid.size());
    ham->ratio.resize(grid.size());
    const Matrix& sT = model_.SigmaT;
    Matrix phi21_0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Matrix& x = phi_h[k];
      const Matrix x11 = x.topLeftCorner(n, n);
      const Matrix x12 = x.topRightCorner(n, n);
      const Matrix x21 = x.bottomLeftCorner(n, n);
      const Matrix x22 = x.bottomRightCorner(n, n);
      Matrix phi22 = x22 - sT * x12;
      const double cond = condition_number(phi22);
      if (!(cond <= kMaxBlockCondition)) {
        throw Error(ErrorKind::IllConditionedBlock,
                    "Hamiltonian block Phibar_22(T, " + std::to_string(grid[k]) +
                        ") has condition number " + std::to_string(cond));
      }
      auto lu = phi22.partialPivLu();
      ham->ratio[k] = phi22.transpose().partialPivLu().solve(x12.transpose()).transpose();
      if (k == 0) {
        phi21_0 = x21 - sT * x11;
        ham->phi22_0_inv = lu.inverse();
      }
      ham->phi22[k] = std::move(phi22);
    }
    const Matrix p0 = psd_sqrt(model_.Pi0);
    const Matrix I = Matrix::Identity(n, n);
    const Matrix inner = I - p0 * ham->phi22_0_inv * phi21_0 * p0;
    ham->prior = p0 * inner.partialPivLu().solve(p0);
    hamiltonian_ = std::move(ham);
  });
}

Matrix KernelField::K_hamiltonian(std::size_t i, std::size_t j) const {
  if (i > j) return K_hamiltonian(j, i).transpose();
  build_hamiltonian();
  const Hamiltonian& h = *hamiltonian_;
  const Matrix k0 = h.phi22[i].transpose() * h.phi22_0_inv.transpose() * h.prior *
                    h.phi22_0_inv * h.phi22[j];
  const Matrix k1 = h.phi22[i].transpose() * (h.ratio[i] - h.ratio[0]) * h.phi22[j];
  return k0 + k1;
}

Matrix kernel_K(const KernelField& field, double s, double t) {
  return field.K(field.grid().index_of(s), field.grid().index_of(t));
}

Matrix kernel_Lambda(const KernelField& field, double s, double t) {
  return field.Lambda(field.grid().index_of(s), field.grid().index_of(t));
}

Matrix kernel_K_bf(const KernelField& field, double s, double t) {
  return field.K_bf(field.grid().index_of(s), field.grid().index_of(t));
}

Matrix kernel_K_hamiltonian(const KernelField& field, double s, double t) {
  return field.K_hamiltonian(field.grid().index_of(s), field.grid().index_of(t));
}

Matrix kernel_value(const KernelField& field, KernelRoute route, std::size_t i, std::size_t j) {
  switch (route) {
    case KernelRoute::Riccati: return field.K(i, j);
    case KernelRoute::BrysonFrazier: return field.K_bf(i, j);
    case KernelRoute::Hamiltonian: return field.K_hamiltonian(i, j);
  }
  throw Error(ErrorKind::PreconditionViolation, "unknown kernel route");
}

Matrix gram(const KernelField& field, KernelKind which, const std::vector<double>& times,
            KernelRoute route) {
  const auto n = field.model().n();
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) idx.push_back(field.grid().index_of(t));
  const auto N = static_cast<Eigen::Index>(times.size());
  Matrix g(N * n, N * n);
  for (Eigen::Index a = 0; a < N; ++a) {
    for (Eigen::Index b = a; b < N; ++b) {
      const Matrix blk = which == KernelKind::K ? kernel_value(field, route, idx[a], idx[b])
                                                : field.Lambda(idx[a], idx[b]);
      g.block(a * n, b * n, n, n) = blk;
      g.block(b * n, a * n, n, n) = blk.transpose();
    }
  }
  return g;
}

BvpSolution solve_bvp(const LtvModel& model, const RiccatiSolution& riccati,
                      const VectorPath& l_mu, const VectorPath& l_nu) {
  const TimeGrid& grid = model.grid;
  if (l_mu.size() != grid.size() || l_nu.size() != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "perturbation paths must have one entry per grid point");
  }
  const auto n = model.n();

  auto r_path = rk4_integrate(
      [&](double t, const Matrix& r) {
        const Matrix pi = riccati.pi_at(t);
        const Matrix a = model.F.at(t) - pi * model.HtRinvH(t);
        return Matrix(a * r + pi * interpolate_path(l_nu, grid, t) +
                      interpolate_path(l_mu, grid, t));
      },
      Matrix::Zero(n, 1), grid, Direction::Forward);

  auto eta_path = rk4_integrate(
      [&](double t, const Matrix& eta) {
        const Matrix sigma = riccati.sigma_at(t);
        const Matrix a = model.F.at(t).transpose() - sigma * model.GQG(t);
        return Matrix(-(a * eta + sigma * interpolate_path(l_mu, grid, t) -
                        interpolate_path(l_nu, grid, t)));
      },
      Matrix::Zero(n, 1), grid, Direction::Backward);

  BvpSolution sol;
  sol.r_path = to_vector_path(r_path);
  sol.eta_path = to_vector_path(eta_path);
  sol.mu_path.resize(grid.size());
  sol.nu_path.resize(grid.size());
  const Matrix I = Matrix::Identity(n, n);
  Matrix system(2 * n, 2 * n);
  Vector rhs(2 * n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    system << I, riccati.pi_path[k], -riccati.sigma_path[k], I;
    const double cond = condition_number(system);
    if (!(cond <= kMaxRecoveryCondition)) {
      throw Error(ErrorKind::SingularRecovery,
                  "recovery system at t = " + std::to_string(grid[k]) +
                      " has condition number " + std::to_string(cond));
    }
    rhs << sol.r_path[k], sol.eta_path[k];
    const Vector x = system.partialPivLu().solve(rhs);
    sol.mu_path[k] = x.head(n);
    sol.nu_path[k] = x.tail(n);
  }
  return sol;
}

Matrix controllability_gramian(const LtvModel& model) {
  const RiccatiSolution unused{model.grid, {}, {}, {}, {}};
  const TransitionFamily phi = build_transition(model, unused, TransitionKind::OpenLoop);
  const TimeGrid& grid = model.grid;
  const Matrix& psi_T = phi.fundamental(grid.n_steps());
  MatrixPath values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix m = psi_T * phi.inverse(k);
    values[k] = m * model.GQG(grid[k]) * m.transpose();
  }
  return symmetrize(simpson(values, grid));
}

const char* to_string(ObservabilityWeight weight) {
  return weight == ObservabilityWeight::Identity ? "identity" : "noise_weighted";
}

Matrix observability_gramian(const LtvModel& model, ObservabilityWeight weight) {
  const RiccatiSolution unused{model.grid, {}, {}, {}, {}};
  const TransitionFamily phi = build_transition(model, unused, TransitionKind::OpenLoop);
  const TimeGrid& grid = model.grid;
  MatrixPath values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix H = model.H.at(grid[k]);
    const Matrix w = weight == ObservabilityWeight::Identity ? Matrix(H.transpose() * H)
                                                             : model.HtRinvH(grid[k]);
    values[k] = phi.fundamental(k).transpose() * w * phi.fundamental(k);
  }
  return symmetrize(simpson(values, grid));
}

void write_gram_csv(std::ostream& os, const std::vector<double>& times, const Matrix& gram) {
  std::vector<std::string> header;
  const auto n = times.empty() ? 0 : gram.rows() / static_cast<Eigen::Index>(times.size());
  for (double t : times) {
    for (Eigen::Index r = 0; r < n; ++r) {
      header.push_back(n == 1 ? csv::format_double(t)
                              : csv::format_double(t) + "#" + std::to_string(r));
    }
  }
  csv::write_row(os, header);
  for (Eigen::Index r = 0; r < gram.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(gram.cols()));
    for (Eigen::Index c = 0; c < gram.cols(); ++c) row[static_cast<std::size_t>(c)] = gram(r, c);
    csv::write_row(os, row);
  }
}

void write_kernel_slice_csv(std::ostream& os, const KernelField& field, KernelKind which,
                            double at, KernelRoute route) {
  const TimeGrid& grid = field.grid();
  const std::size_t j = grid.index_of(at);
  MatrixPath slice(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    slice[i] = which == KernelKind::K ? kernel_value(field, route, i, j) : field.Lambda(i, j);
  }
  write_path_csv(os, grid, slice, which == KernelKind::K ? "K" : "Lambda");
}

}  // namespace greenfilter
