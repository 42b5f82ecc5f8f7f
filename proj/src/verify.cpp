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
#include "greenfilter/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace greenfilter {

Vector random_vector(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

VectorPath random_smooth_path(std::mt19937_64& rng, const TimeGrid& grid, Eigen::Index dim) {
  const Matrix weights = [&] {
    Matrix w(dim, 6);
    for (Eigen::Index c = 0; c < 6; ++c) w.col(c) = random_vector(rng, dim);
    return w;
  }();
  VectorPath out(grid.size());
  const double span = grid.T() - grid.t0();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double u = (grid[k] - grid.t0()) / span;
    out[k] = Vector::Zero(dim);
    for (int f = 0; f < 3; ++f) {
      const double w = (f + 1) * std::numbers::pi * u;
      out[k] += weights.col(2 * f) * std::sin(w) + weights.col(2 * f + 1) * std::cos(w);
    }
  }
  return out;
}

std::vector<std::size_t> spread_indices(const TimeGrid& grid, std::size_t count) {
  const std::size_t N = grid.n_steps();
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < count; ++a) {
    const std::size_t k = count > 1 ? (a * N + (count - 1) / 2) / (count - 1) : 0;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

double bvp_oracle_error(const KernelField& field, std::uint64_t seed, std::size_t trials,
                        std::size_t samples) {
  const LtvModel& model = field.model();
  const TimeGrid& grid = model.grid;
  const std::vector<double> w = grid.trapezoid_weights();
  const auto probes = spread_indices(grid, samples);
  const VectorPath zero(grid.size(), Vector::Zero(model.n()));
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (int side = 0; side < 2; ++side) {
      VectorPath l(grid.size());
      if (side == 0) {
        const VectorPath g = random_smooth_path(rng, grid, model.m());
        for (std::size_t k = 0; k < grid.size(); ++k) l[k] = model.HtRinv(grid[k]) * g[k];
      } else {
        l = random_smooth_path(rng, grid, model.n());
      }
      const BvpSolution bvp = side == 0 ? solve_bvp(model, field.riccati(), zero, l)
                                        : solve_bvp(model, field.riccati(), l, zero);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t s : probes) {
        Vector quad = Vector::Zero(model.n());
        for (std::size_t k = 0; k < grid.size(); ++k) {
          quad += w[k] * (side == 0 ? field.K(s, k) : field.Lambda(s, k)) * l[k];
        }
        const Vector& got = side == 0 ? bvp.mu_path[s] : bvp.nu_path[s];
        num += (got - quad).squaredNorm();
        den += quad.squaredNorm();
      }
      worst = std::max(worst, std::sqrt(num / std::max(den, std::numeric_limits<double>::min())));
    }
  }
  return worst;
}

namespace {

Check bounded(std::string name, double value, double bound) {
  return {std::move(name), value <= bound, value, bound};
}

template <class Fn>
Check guarded(const std::string& name, double bound, Fn&& fn) {
  try {
    return bounded(name, fn(), bound);
  } catch (const Error&) {
    return {name, false, std::numeric_limits<double>::infinity(), bound};
  }
}

}  // namespace

std::vector<Check> verify_identities(const KernelField& field, std::uint64_t seed) {
  const LtvModel& model = field.model();
  const RiccatiSolution& ric = field.riccati();
  const std::size_t N = model.grid.n_steps();
  const auto probes = spread_indices(model.grid, 16);
  std::vector<Check> out;

  out.push_back(bounded("terminal_kernel_equals_pi",
                        (field.K(N, N) - ric.pi_path[N]).cwiseAbs().maxCoeff(), 1e-6));
  double diag = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    const Matrix& pi = ric.pi_path[k];
    diag = std::max(diag, (field.K(k, k) - (pi - pi * field.Lambda(k, k) * pi)).cwiseAbs().maxCoeff());
  }
  out.push_back(bounded("diagonal_identity", diag, 1e-6));

  double sym = 0.0;
  for (std::size_t i : probes) {
    for (std::size_t j : probes) {
      sym = std::max(sym, (field.K(i, j) - field.K(j, i).transpose()).cwiseAbs().maxCoeff());
    }
  }
  out.push_back(bounded("kernel_symmetry", sym, 1e-10));

  std::vector<double> times;
  for (std::size_t k : probes) times.push_back(model.grid[k]);
  const Matrix g = gram(field, KernelKind::K, times);
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  out.push_back(bounded("gram_positive", -min_eigenvalue(symmetrize(g)) / scale, 1e-8));

  if (field.sigma_terminal_zero()) {
    for (KernelRoute route : {KernelRoute::BrysonFrazier, KernelRoute::Hamiltonian}) {
      const char* name =
          route == KernelRoute::BrysonFrazier ? "route_bryson_frazier" : "route_hamiltonian";
      out.push_back(guarded(name, 1e-5, [&] {
        double gap = 0.0;
        for (std::size_t i : probes) {
          for (std::size_t j : probes) {
            gap = std::max(gap,
                           (field.K(i, j) - kernel_value(field, route, i, j)).cwiseAbs().maxCoeff());
          }
        }
        return gap;
      }));
    }
  }

  out.push_back(guarded("mirror_lambda", 1e-8, [&] {
    const KernelField mirrored(mirror_model(model));
    double gap = 0.0;
    for (std::size_t i : probes) {
      for (std::size_t j : probes) {
        gap = std::max(gap, (field.Lambda(i, j) - mirrored.K(N - i, N - j)).cwiseAbs().maxCoeff());
      }
    }
    return gap;
  }));

  out.push_back(guarded("bvp_oracle", 1e-4, [&] { return bvp_oracle_error(field, seed); }));

  const Eigen::FullPivLU<Matrix> pi_t(ric.pi_path[N]);
  if (pi_t.isInvertible() && model.SigmaT.size() &&
      (model.SigmaT * ric.pi_path[N] + Matrix::Identity(model.n(), model.n()))
              .cwiseAbs()
              .maxCoeff() < 1e-8) {
    double gap = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
      gap = std::max(gap, (ric.sigma_path[k] + ric.pi_path[k].inverse()).cwiseAbs().maxCoeff());
    }
    out.push_back(bounded("riccati_duality", gap, 1e-6));
  }
  return out;
}

RkhsSummary rkhs_summary(const KernelField& field, std::uint64_t seed, std::size_t elements,
                         std::size_t directions) {
  const LtvModel& model = field.model();
  const TimeGrid& grid = model.grid;
  const auto n = model.n();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> index(0, grid.n_steps());
  RkhsSummary out;

  auto relative = [](double got, double want, double scale) {
    return std::abs(got - want) / std::max({std::abs(want), 1e-3 * scale, 1e-300});
  };
  for (std::size_t e = 0; e < elements; ++e) {
    const std::size_t j = index(rng);
    const Vector z = random_vector(rng, n);

    const TrajectoryElement x =
        make_trajectory(model, random_vector(rng, n), random_smooth_path(rng, grid, model.p()));
    const TrajectoryElement section = kernel_section(field, grid[j], z);
    out.reproducing_x = std::max(
        out.reproducing_x, relative(inner_product_x(x, section, model), x.x_path[j].dot(z),
                                    x.x_path[j].norm() * z.norm()));
    const double quad = z.dot(field.K(j, j) * z);
    out.norm_x = std::max(out.norm_x, relative(inner_product_x(section, section, model), quad,
                                               field.K(j, j).norm() * z.squaredNorm()));

    const InformationElement lam =
        make_information(model, random_vector(rng, n), random_smooth_path(rng, grid, model.m()));
    const InformationElement lsec = lambda_section(field, grid[j], z);
    out.reproducing_lambda =
        std::max(out.reproducing_lambda,
                 relative(inner_product_lambda(lam, lsec, model), lam.lambda_path[j].dot(z),
                          lam.lambda_path[j].norm() * z.norm()));
  }

  const VectorPath y = random_smooth_path(rng, grid, model.m());
  const TrajectoryElement x_hat = smooth_kernel(field, y);
  const double L = primal_objective(x_hat, y, model);
  const double eps = 1e-4;
  for (std::size_t d = 0; d < directions; ++d) {
    const TrajectoryElement dir = kernel_section(field, grid[index(rng)], random_vector(rng, n));
    const double slope = (primal_objective(x_hat + eps * dir, y, model) -
                          primal_objective(x_hat + (-eps) * dir, y, model)) /
                         (2.0 * eps);
    out.primal_derivative = std::max(out.primal_derivative, std::abs(slope) / (1.0 + std::abs(L)));
  }
  const InformationElement lam_hat = dual_from_primal(x_hat, y, model);
  out.stationarity = stationarity_residual(lam_hat, x_hat, y, model);
  out.duality_gap = L + dual_objective(lam_hat, y, model);
  return out;
}

std::vector<Check> verify_rkhs(const KernelField& field, std::uint64_t seed) {
  const RkhsSummary s = rkhs_summary(field, seed);
  return {bounded("reproducing_trajectory", s.reproducing_x, 1e-4),
          bounded("norm_trajectory", s.norm_x, 1e-4),
          bounded("reproducing_information", s.reproducing_lambda, 1e-4),
          bounded("primal_directional_derivative", s.primal_derivative, 1e-5),
          bounded("dual_stationarity", s.stationarity, 1e-5)};
}

std::vector<Check> verify_montecarlo(const KernelField& field, MonteCarloConfig config,
                                     MonteCarloReport* report) {
  const TimeGrid& grid = field.grid();
  if (config.probes.empty()) {
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
      config.probes.push_back(grid[static_cast<std::size_t>(std::lround(f * grid.n_steps()))]);
    }
  }
  MonteCarloReport r = run_monte_carlo(field, config);
  std::vector<Check> checks = evaluate(r);
  if (report) *report = std::move(r);
  return checks;
}

}  // namespace greenfilter
