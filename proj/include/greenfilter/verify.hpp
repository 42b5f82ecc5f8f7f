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

#include <random>

#include "greenfilter/mcsim.hpp"
#include "greenfilter/rkhs.hpp"

namespace greenfilter {

/// Sum of three sine/cosine harmonics per component with N(0,1) weights.
VectorPath random_smooth_path(std::mt19937_64& rng, const TimeGrid& grid, Eigen::Index dim);
Vector random_vector(std::mt19937_64& rng, Eigen::Index dim);

/// `count` grid indices spread evenly over the horizon, endpoints included.
std::vector<std::size_t> spread_indices(const TimeGrid& grid, std::size_t count);

/// Max relative L2 error, over the sampled s, between solve_bvp and kernel
/// quadrature for `trials` random smooth perturbations (l_nu alone, then
/// l_mu alone).
double bvp_oracle_error(const KernelField& field, std::uint64_t seed, std::size_t trials = 10,
                        std::size_t samples = 65);

/// Diagonal identities, symmetry, cross-route agreement (when SigmaT = 0),
/// the mirror identity, the BVP oracle and, when the model sets it up,
/// the Sigma = -Pi^-1 duality (SigmaT = -Pi(T)^-1).
std::vector<Check> verify_identities(const KernelField& field, std::uint64_t seed = 0);

struct RkhsSummary {
  double reproducing_x = 0.0;
  double norm_x = 0.0;
  double reproducing_lambda = 0.0;
  double primal_derivative = 0.0;
  double stationarity = 0.0;
  double duality_gap = 0.0;  ///< L_x(x_hat) + L_lambda(lambda_hat), reported only
};

RkhsSummary rkhs_summary(const KernelField& field, std::uint64_t seed, std::size_t elements = 20,
                         std::size_t directions = 10);

/// Reproducing property in both spaces, primal optimality, dual stationarity.
std::vector<Check> verify_rkhs(const KernelField& field, std::uint64_t seed = 0);

/// Probes default to the quarter points of the horizon.
std::vector<Check> verify_montecarlo(const KernelField& field, MonteCarloConfig config,
                                     MonteCarloReport* report = nullptr);

}  // namespace greenfilter
