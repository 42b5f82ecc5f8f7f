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

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "greenfilter/estimation.hpp"
#include "greenfilter/philox.hpp"

namespace greenfilter {

/// Thread count from GREENFILTER_THREADS (unset or 0 = hardware concurrency).
unsigned configured_threads();

/// Runs fn(i) for i in [0, count) on up to `threads` workers with static
/// chunking; results must be written to per-index slots.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

/// Order-independent, deterministic summation.
double pairwise_sum(const double* values, std::size_t count);

/// Euler-Maruyama sample paths of state and cumulative observation.
struct Ensemble {
  TimeGrid grid{0.0, 1.0, 1};
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<VectorPath> x;
  std::vector<VectorPath> y;
};

/// Channels of the noise stream for each path.
enum class NoiseChannel : std::uint32_t { Initial = 0, Plant = 1, Observation = 2 };

/// Draws one path into x (n_steps + 1 states) and dy (n_steps increments).
/// The model is not validated, so degenerate noise (Q = 0, R = 0) is allowed.
class PathSimulator {
 public:
  PathSimulator(const LtvModel& model, std::uint64_t seed);
  void simulate(std::uint32_t path, VectorPath& x, VectorPath& dy) const;

 private:
  const LtvModel* model_;
  NormalStream stream_;
  Matrix pi0_half_;
  MatrixPath F_, B_, H_, D_;
  VectorPath f_, h_;
  mutable Vector xi_, eta_, zeta_, tmp_;
};

Ensemble simulate(const LtvModel& model, std::size_t n_paths, std::uint64_t seed,
                  unsigned threads = 0);

/// Per-path filter and smoother outputs for an ensemble.
struct EnsembleEstimates {
  std::vector<VectorPath> filtered;
  std::vector<VectorPath> smoothed;
  std::vector<VectorPath> innovations;
};

EnsembleEstimates estimate_ensemble(const Ensemble& ensemble, const LtvModel& model,
                                    const RiccatiSolution& riccati, unsigned threads = 0);

struct CovarianceEstimate {
  double s = 0.0;
  double t = 0.0;
  Matrix mean;
  Matrix standard_error;
};

/// Sample mean of (x(s) - x_hat(s)) (x(t) - x_hat(t))' over paths for every
/// pair of probe times, with per-entry standard errors.
std::vector<CovarianceEstimate> empirical_error_covariance(const Ensemble& ensemble,
                                                           const std::vector<VectorPath>& estimates,
                                                           const std::vector<double>& times);

struct WhitenessReport {
  std::size_t n_paths = 0;
  Matrix quadratic_variation;  ///< mean over paths of sum_k de_k de_k'
  Matrix expected;             ///< integral of R
  double relative_error = 0.0;
  double split_time = 0.0;
  Matrix increment_correlation;  ///< corr(e(split) - e(t0), e(T) - e(split))
  double correlation_se = 0.0;
};

WhitenessReport innovation_whiteness(const Ensemble& ensemble,
                                     const std::vector<VectorPath>& innovations,
                                     const LtvModel& model);

struct MonteCarloConfig {
  std::size_t n_paths = 20000;
  std::uint64_t seed = 0;
  std::vector<double> probes;
  unsigned threads = 0;
};

struct ProbeResult {
  double t = 0.0;
  Matrix kernel;  ///< K(t,t|T)
  Matrix pi;      ///< Pi(t)
  Matrix smoothed;
  Matrix smoothed_se;
  Matrix filtered;
  Matrix filtered_se;
};

struct MonteCarloReport {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<ProbeResult> probes;
  std::vector<CovarianceEstimate> cross;  ///< smoothed errors, all probe pairs
  std::vector<Matrix> cross_kernel;       ///< K(s,t|T) for each entry of `cross`
  WhitenessReport whiteness;
};

/// Streams paths through the simulator and the innovation smoother without
/// keeping them; only per-path probe errors are stored.
MonteCarloReport run_monte_carlo(const KernelField& field, const MonteCarloConfig& config);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
};

/// Covariance within 5% relative and 3 SE of K, smoothed <= Pi + 3 SE,
/// smoothed <= filtered + 3 SE, quadratic variation within 5%,
/// increment correlations within 3 SE of zero.
std::vector<Check> evaluate(const MonteCarloReport& report);

void write_report_csv(std::ostream& os, const MonteCarloReport& report);
std::string report_json(const MonteCarloReport& report, const std::vector<Check>& checks);

}  // namespace greenfilter
