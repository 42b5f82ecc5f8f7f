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

#include <memory>
#include <mutex>
#include <ostream>

#include "greenfilter/riccati.hpp"

namespace greenfilter {

enum class KernelKind { K, Lambda };

/// Evaluator for the smoothing-error covariance kernel K(s,t|T) and the
/// information kernel Lambda(s,t|T) on grid pairs.
///
/// With Psi(tau) = Phi_{F,Sigma}(tau, t0),
///   K(s,t) = Psi(s) [A + C(min(s,t))] Psi(t)*,
/// and with Xi(tau) = Phi_{F,Pi}(tau, t0),
///   Lambda(s,t) = Xi(s)^-* [Xi(T)* B Xi(T) + D(max(s,t))] Xi(t)^-1,
/// where C and D are running integrals over [t0, tau] and [tau, T].
class KernelField {
 public:
  explicit KernelField(LtvModel model);
  KernelField(LtvModel model, RiccatiSolution riccati);

  const LtvModel& model() const noexcept { return model_; }
  const RiccatiSolution& riccati() const noexcept { return riccati_; }
  const TimeGrid& grid() const noexcept { return model_.grid; }
  const TransitionFamily& open_loop() const noexcept { return open_loop_; }
  const TransitionFamily& sigma_closed() const noexcept { return sigma_closed_; }
  const TransitionFamily& pi_closed() const noexcept { return pi_closed_; }

  /// Grid-index forms.
  Matrix K(std::size_t i, std::size_t j) const;
  Matrix Lambda(std::size_t i, std::size_t j) const;
  Matrix K_bf(std::size_t i, std::size_t j) const;
  Matrix K_hamiltonian(std::size_t i, std::size_t j) const;

  /// sum_k K(tau_j, tau_k) c_k for every grid index j, in O(grid).
  VectorPath superpose(const VectorPath& c) const;

  /// Pieces of the closed form, exposed for O(N) superposition.
  const Matrix& K_prior() const noexcept { return K_prior_; }
  const Matrix& K_running(std::size_t k) const { return K_running_[k]; }

  bool sigma_terminal_zero() const noexcept;

 private:
  void require_sigma_terminal_zero(const char* what) const;
  void build_hamiltonian() const;

  LtvModel model_;
  RiccatiSolution riccati_;
  TransitionFamily open_loop_;
  TransitionFamily sigma_closed_;
  TransitionFamily pi_closed_;

  Matrix K_prior_;
  MatrixPath K_running_;
  Matrix L_terminal_;
  MatrixPath L_running_;

  struct Hamiltonian {
    MatrixPath phi22;   // Phibar_22(T, tau_k)
    MatrixPath ratio;   // Phibar_12 Phibar_22^-1 (T, tau_k)
    Matrix prior;       // K0 middle factor
    Matrix phi22_0_inv;
  };
  mutable std::once_flag hamiltonian_once_;
  mutable std::shared_ptr<const Hamiltonian> hamiltonian_;
};

inline constexpr double kMaxBlockCondition = 1e10;

Matrix kernel_K(const KernelField& field, double s, double t);
Matrix kernel_Lambda(const KernelField& field, double s, double t);
/// Cross formula through Pi and Lambda; needs SigmaT = 0.
Matrix kernel_K_bf(const KernelField& field, double s, double t);
/// Blocks of the Hamiltonian transition matrix (matrix exponential when the
/// model is time invariant, backward RK4 otherwise).
Matrix kernel_K_hamiltonian(const KernelField& field, double s, double t);

enum class KernelRoute { Riccati, BrysonFrazier, Hamiltonian };

Matrix kernel_value(const KernelField& field, KernelRoute route, std::size_t i, std::size_t j);

/// Block matrix with block (i, j) = kernel(times_i, times_j).
Matrix gram(const KernelField& field, KernelKind which, const std::vector<double>& times,
            KernelRoute route = KernelRoute::Riccati);

struct BvpSolution {
  VectorPath mu_path;
  VectorPath nu_path;
  VectorPath r_path;
  VectorPath eta_path;
};

inline constexpr double kMaxRecoveryCondition = 1e12;

/// Coupled forward/backward problem
///   dmu/dt  = F mu - G Q G* nu + l_mu,          mu(t0) = -Pi0 nu(t0)
///   -dnu/dt = F* nu + H* R^-1 H mu - l_nu,      nu(T)  = SigmaT mu(T)
/// solved through the decoupled variables r = mu + Pi nu and eta = nu - Sigma mu.
BvpSolution solve_bvp(const LtvModel& model, const RiccatiSolution& riccati,
                      const VectorPath& l_mu, const VectorPath& l_nu);

/// Integral over the horizon of Phi_F(T,tau) G Q G* Phi_F(T,tau)*.
Matrix controllability_gramian(const LtvModel& model);

enum class ObservabilityWeight {
  Identity,       ///< H* H
  NoiseWeighted,  ///< H* R^-1 H
};

const char* to_string(ObservabilityWeight weight);

/// Integral over the horizon of Phi_F(tau,t0)* W Phi_F(tau,t0).
Matrix observability_gramian(const LtvModel& model,
                             ObservabilityWeight weight = ObservabilityWeight::Identity);

/// Header row of times, then one row per block row.
void write_gram_csv(std::ostream& os, const std::vector<double>& times, const Matrix& gram);

/// Rows: t, then the row-major entries of kernel(t, at) for every grid t.
void write_kernel_slice_csv(std::ostream& os, const KernelField& field, KernelKind which,
                            double at, KernelRoute route = KernelRoute::Riccati);

}  // namespace greenfilter
