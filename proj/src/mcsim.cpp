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
#include "greenfilter/mcsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <limits>
#include <thread>

#include <json.hpp>

#include "greenfilter/csv.hpp"

namespace greenfilter {

unsigned configured_threads() {
  unsigned requested = 0;
  if (const char* env = std::getenv("GREENFILTER_THREADS")) {
    const char* end = env + std::strlen(env);
    if (std::from_chars(env, end, requested).ec != std::errc{}) requested = 0;
  }
  if (requested == 0) requested = std::thread::hardware_concurrency();
  return std::max(1u, requested);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(count, w * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        if (begin < end) fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error of the mean of `samples`.
Moments moments(std::vector<double>& samples) {
  const auto n = samples.size();
  Moments out;
  out.mean = pairwise_sum(samples.data(), n) / static_cast<double>(n);
  for (double& s : samples) s = (s - out.mean) * (s - out.mean);
  const double var = pairwise_sum(samples.data(), n) / static_cast<double>(n - 1);
  out.se = std::sqrt(var / static_cast<double>(n));
  return out;
}

/// Entry-wise mean/SE of a(path) b(path)' where a and b are read from flat
/// per-path buffers with the given stride and offsets.
void product_moments(const std::vector<double>& a_data, std::size_t a_offset,
                     const std::vector<double>& b_data, std::size_t b_offset, std::size_t stride,
                     std::size_t n_paths, Eigen::Index n, Matrix& mean, Matrix& se) {
  mean.resize(n, n);
  se.resize(n, n);
  std::vector<double> samples(n_paths);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (std::size_t q = 0; q < n_paths; ++q) {
        samples[q] = a_data[q * stride + a_offset + static_cast<std::size_t>(i)] *
                     b_data[q * stride + b_offset + static_cast<std::size_t>(j)];
      }
      const Moments mo = moments(samples);
      mean(i, j) = mo.mean;
      se(i, j) = mo.se;
    }
  }
}

/// Per-path innovation statistics: flattened sum of de de' (m*m), then the
/// increments over [t0, split] (m) and [split, T] (m).
struct InnovationStats {
  std::size_t m = 0;
  std::size_t split = 0;
  std::vector<double> data;
  std::size_t stride() const { return m * m + 2 * m; }
};

void accumulate_increment(InnovationStats& stats, std::size_t path, std::size_t k,
                          const Vector& de) {
  double* row = stats.data.data() + path * stats.stride();
  const auto m = stats.m;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) row[i * m + j] += de(i) * de(j);
  }
  double* inc = row + m * m + (k < stats.split ? 0 : m);
  for (std::size_t i = 0; i < m; ++i) inc[i] += de(i);
}

WhitenessReport summarize_whiteness(const InnovationStats& stats, std::size_t n_paths,
                                    const LtvModel& model) {
  const TimeGrid& grid = model.grid;
  const auto m = static_cast<Eigen::Index>(stats.m);
  const std::size_t stride = stats.stride();
  WhitenessReport out;
  out.n_paths = n_paths;
  out.split_time = grid[stats.split];
  out.quadratic_variation.resize(m, m);
  std::vector<double> samples(n_paths);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (std::size_t q = 0; q < n_paths; ++q) {
        samples[q] = stats.data[q * stride + static_cast<std::size_t>(i * m + j)];
      }
      out.quadratic_variation(i, j) =
          pairwise_sum(samples.data(), n_paths) / static_cast<double>(n_paths);
    }
  }
  MatrixPath r(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) r[k] = model.R.at_index(k);
  out.expected = trapezoid(r, grid);
  const double scale = out.expected.norm();
  out.relative_error = (out.quadratic_variation - out.expected).norm() /
                       (scale > 0.0 ? scale : 1.0);

  const std::size_t a0 = stats.m * stats.m;
  const std::size_t b0 = a0 + stats.m;
  auto column = [&](std::size_t offset) {
    std::vector<double> v(n_paths);
    for (std::size_t q = 0; q < n_paths; ++q) v[q] = stats.data[q * stride + offset];
    const double mean = pairwise_sum(v.data(), n_paths) / static_cast<double>(n_paths);
    for (double& x : v) x -= mean;
    return v;
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t q = 0; q < n_paths; ++q) samples[q] = a[q] * b[q];
    return pairwise_sum(samples.data(), n_paths);
  };
  out.increment_correlation.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto a = column(a0 + static_cast<std::size_t>(i));
    const double saa = dot(a, a);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto b = column(b0 + static_cast<std::size_t>(j));
      const double denom = std::sqrt(saa * dot(b, b));
      out.increment_correlation(i, j) = denom > 0.0 ? dot(a, b) / denom : 0.0;
    }
  }
  out.correlation_se = 1.0 / std::sqrt(static_cast<double>(n_paths));
  return out;
}

void require_paths(std::size_t n_paths) {
  if (n_paths < 2) {
    throw Error(ErrorKind::InsufficientPaths,
                "need at least 2 paths, got " + std::to_string(n_paths));
  }
}

}  // namespace

PathSimulator::PathSimulator(const LtvModel& model, std::uint64_t seed)
    : model_(&model), stream_(seed), pi0_half_(psd_sqrt(model.Pi0)) {
  const std::size_t size = model.grid.size();
  F_.resize(size);
  B_.resize(size);
  H_.resize(size);
  D_.resize(size);
  f_.resize(size);
  h_.resize(size);
  for (std::size_t k = 0; k < size; ++k) {
    F_[k] = model.F.at_index(k);
    B_[k] = model.G.at_index(k) * psd_sqrt(model.Q.at_index(k));
    H_[k] = model.H.at_index(k);
    D_[k] = psd_sqrt(model.R.at_index(k));
    f_[k] = model.f.at_index(k).col(0);
    h_[k] = model.h.at_index(k).col(0);
  }
  xi_.resize(model.p());
  eta_.resize(model.m());
  zeta_.resize(model.n());
  tmp_.resize(model.n());
}

void PathSimulator::simulate(std::uint32_t path, VectorPath& x, VectorPath& dy) const {
  const TimeGrid& grid = model_->grid;
  const std::size_t N = grid.n_steps();
  const double h = grid.step();
  const double root_h = std::sqrt(h);
  x.resize(N + 1);
  dy.resize(N);
  stream_.fill(path, 0, static_cast<std::uint32_t>(NoiseChannel::Initial), zeta_.data(),
               static_cast<std::size_t>(zeta_.size()));
  x[0] = model_->x0;
  x[0].noalias() += pi0_half_ * zeta_;
  for (std::size_t k = 0; k < N; ++k) {
    const auto step = static_cast<std::uint32_t>(k);
    stream_.fill(path, step, static_cast<std::uint32_t>(NoiseChannel::Plant), xi_.data(),
                 static_cast<std::size_t>(xi_.size()));
    stream_.fill(path, step, static_cast<std::uint32_t>(NoiseChannel::Observation), eta_.data(),
                 static_cast<std::size_t>(eta_.size()));
    dy[k] = h * h_[k];
    dy[k].noalias() += h * (H_[k] * x[k]);
    dy[k].noalias() += root_h * (D_[k] * eta_);
    tmp_ = f_[k];
    tmp_.noalias() += F_[k] * x[k];
    x[k + 1] = x[k] + h * tmp_;
    x[k + 1].noalias() += root_h * (B_[k] * xi_);
  }
}

Ensemble simulate(const LtvModel& model, std::size_t n_paths, std::uint64_t seed,
                  unsigned threads) {
  Ensemble out;
  out.grid = model.grid;
  out.n_paths = n_paths;
  out.seed = seed;
  out.x.resize(n_paths);
  out.y.resize(n_paths);
  parallel_for(n_paths, threads ? threads : configured_threads(),
               [&](std::size_t begin, std::size_t end) {
                 const PathSimulator sim(model, seed);
                 VectorPath dy;
                 for (std::size_t q = begin; q < end; ++q) {
                   sim.simulate(static_cast<std::uint32_t>(q), out.x[q], dy);
                   VectorPath& y = out.y[q];
                   y.resize(dy.size() + 1);
                   y[0] = model.y0;
                   for (std::size_t k = 0; k < dy.size(); ++k) y[k + 1] = y[k] + dy[k];
                 }
               });
  return out;
}

EnsembleEstimates estimate_ensemble(const Ensemble& ensemble, const LtvModel& model,
                                    const RiccatiSolution& riccati, unsigned threads) {
  if (!(ensemble.grid == model.grid)) {
    throw Error(ErrorKind::GridMismatch, "ensemble is not on the model grid");
  }
  const InnovationSmoother plan(model, riccati);
  const TimeGrid& grid = model.grid;
  MatrixPath H(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) H[k] = model.H.at_index(k);
  EnsembleEstimates out;
  const std::size_t P = ensemble.n_paths;
  out.filtered.resize(P);
  out.smoothed.resize(P);
  out.innovations.resize(P);
  parallel_for(P, threads ? threads : configured_threads(),
               [&](std::size_t begin, std::size_t end) {
                 VectorPath dy, dyt, r, adjoint;
                 for (std::size_t q = begin; q < end; ++q) {
                   const VectorPath& y = ensemble.y[q];
                   dy.resize(grid.n_steps());
                   for (std::size_t k = 0; k < dy.size(); ++k) dy[k] = y[k + 1] - y[k];
                   plan.center(dy, dyt);
                   plan.filter(dyt, r);
                   plan.smooth(dyt, r, adjoint, out.smoothed[q]);
                   out.filtered[q].resize(grid.size());
                   out.innovations[q].resize(grid.size());
                   out.innovations[q][0] = y[0];
                   for (std::size_t k = 0; k < grid.size(); ++k) {
                     out.filtered[q][k] = plan.means().x_bar[k] + r[k];
                     out.smoothed[q][k] += plan.means().x_bar[k];
                     if (k < dy.size()) {
                       out.innovations[q][k + 1] =
                           out.innovations[q][k] + dyt[k] - grid.step() * (H[k] * r[k]);
                     }
                   }
                 }
               });
  return out;
}

std::vector<CovarianceEstimate> empirical_error_covariance(const Ensemble& ensemble,
                                                           const std::vector<VectorPath>& estimates,
                                                           const std::vector<double>& times) {
  require_paths(ensemble.n_paths);
  if (estimates.size() != ensemble.n_paths) {
    throw Error(ErrorKind::GridMismatch, "one estimate path per ensemble path is required");
  }
  std::vector<std::size_t> idx;
  for (double t : times) idx.push_back(ensemble.grid.index_of(t));
  const auto n = ensemble.x.front().front().size();
  const std::size_t P = ensemble.n_paths;
  const std::size_t stride = idx.size() * static_cast<std::size_t>(n);
  std::vector<double> err(P * stride);
  for (std::size_t q = 0; q < P; ++q) {
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const Vector e = ensemble.x[q][idx[p]] - estimates[q][idx[p]];
      std::copy(e.data(), e.data() + n, err.begin() + static_cast<std::ptrdiff_t>(q * stride + p * n));
    }
  }
  std::vector<CovarianceEstimate> out;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a; b < idx.size(); ++b) {
      CovarianceEstimate c;
      c.s = ensemble.grid[idx[a]];
      c.t = ensemble.grid[idx[b]];
      product_moments(err, a * n, err, b * n, stride, P, n, c.mean, c.standard_error);
      out.push_back(std::move(c));
    }
  }
  return out;
}

WhitenessReport innovation_whiteness(const Ensemble& ensemble,
                                     const std::vector<VectorPath>& innovations,
                                     const LtvModel& model) {
  require_paths(ensemble.n_paths);
  if (innovations.size() != ensemble.n_paths) {
    throw Error(ErrorKind::GridMismatch, "one innovation path per ensemble path is required");
  }
  InnovationStats stats;
  stats.m = static_cast<std::size_t>(model.m());
  stats.split = model.grid.n_steps() / 2;
  stats.data.assign(ensemble.n_paths * stats.stride(), 0.0);
  for (std::size_t q = 0; q < ensemble.n_paths; ++q) {
    const VectorPath& e = innovations[q];
    for (std::size_t k = 0; k + 1 < e.size(); ++k) accumulate_increment(stats, q, k, e[k + 1] - e[k]);
  }
  return summarize_whiteness(stats, ensemble.n_paths, model);
}

MonteCarloReport run_monte_carlo(const KernelField& field, const MonteCarloConfig& config) {
  require_paths(config.n_paths);
  const LtvModel& model = field.model();
  const TimeGrid& grid = model.grid;
  const InnovationSmoother plan(model, field.riccati());
  std::vector<std::size_t> idx;
  for (double t : config.probes) idx.push_back(grid.index_of(t));
  const auto n = static_cast<std::size_t>(model.n());
  const std::size_t P = config.n_paths;
  const std::size_t stride = idx.size() * n;
  std::vector<double> smoothed_err(P * stride);
  std::vector<double> filtered_err(P * stride);
  InnovationStats stats;
  stats.m = static_cast<std::size_t>(model.m());
  stats.split = grid.n_steps() / 2;
  stats.data.assign(P * stats.stride(), 0.0);
  MatrixPath H(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) H[k] = model.H.at_index(k);

  parallel_for(P, config.threads ? config.threads : configured_threads(),
               [&](std::size_t begin, std::size_t end) {
                 const PathSimulator sim(model, config.seed);
                 VectorPath x, dy, dyt, r, adjoint, smoothed;
                 Vector de(model.m());
                 for (std::size_t q = begin; q < end; ++q) {
                   sim.simulate(static_cast<std::uint32_t>(q), x, dy);
                   plan.center(dy, dyt);
                   plan.filter(dyt, r);
                   plan.smooth(dyt, r, adjoint, smoothed);
                   for (std::size_t p = 0; p < idx.size(); ++p) {
                     const std::size_t k = idx[p];
                     for (std::size_t i = 0; i < n; ++i) {
                       const auto ii = static_cast<Eigen::Index>(i);
                       const double base = x[k](ii) - plan.means().x_bar[k](ii);
                       smoothed_err[q * stride + p * n + i] = base - smoothed[k](ii);
                       filtered_err[q * stride + p * n + i] = base - r[k](ii);
                     }
                   }
                   for (std::size_t k = 0; k < dyt.size(); ++k) {
                     de = dyt[k];
                     de.noalias() -= grid.step() * (H[k] * r[k]);
                     accumulate_increment(stats, q, k, de);
                   }
                 }
               });

  MonteCarloReport out;
  out.n_paths = P;
  out.seed = config.seed;
  const auto ni = static_cast<Eigen::Index>(n);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    ProbeResult pr;
    pr.t = grid[idx[p]];
    pr.kernel = field.K(idx[p], idx[p]);
    pr.pi = field.riccati().pi_path[idx[p]];
    product_moments(smoothed_err, p * n, smoothed_err, p * n, stride, P, ni, pr.smoothed,
                    pr.smoothed_se);
    product_moments(filtered_err, p * n, filtered_err, p * n, stride, P, ni, pr.filtered,
                    pr.filtered_se);
    out.probes.push_back(std::move(pr));
  }
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      CovarianceEstimate c;
      c.s = grid[idx[a]];
      c.t = grid[idx[b]];
      product_moments(smoothed_err, a * n, smoothed_err, b * n, stride, P, ni, c.mean,
                      c.standard_error);
      out.cross.push_back(std::move(c));
      out.cross_kernel.push_back(field.K(idx[a], idx[b]));
    }
  }
  out.whiteness = summarize_whiteness(stats, P, model);
  return out;
}

namespace {

std::string probe_label(const std::string& name, double t) {
  return name + "[t=" + csv::format_double(t) + "]";
}

}  // namespace

std::vector<Check> evaluate(const MonteCarloReport& report) {
  std::vector<Check> checks;
  for (const ProbeResult& pr : report.probes) {
    double rel = 0.0;
    double in_se = 0.0;
    double above_pi = -std::numeric_limits<double>::infinity();
    double above_filtered = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pr.kernel.rows(); ++i) {
      const double gap = std::abs(pr.smoothed(i, i) - pr.kernel(i, i));
      const double ref = std::abs(pr.kernel(i, i));
      rel = std::max(rel, ref > 0.0 ? gap / ref : (gap > 0.0 ? gap : 0.0));
      const double se = pr.smoothed_se(i, i);
      in_se = std::max(in_se, se > 0.0 ? gap / se : (gap > 0.0 ? gap : 0.0));
      above_pi = std::max(above_pi, pr.smoothed(i, i) - pr.pi(i, i) - 3.0 * se);
      above_filtered = std::max(above_filtered, pr.smoothed(i, i) - pr.filtered(i, i) -
                                                    3.0 * pr.filtered_se(i, i));
    }
    checks.push_back({probe_label("covariance_relative", pr.t), rel <= 0.05, rel, 0.05});
    checks.push_back({probe_label("covariance_standard_errors", pr.t), in_se <= 3.0, in_se, 3.0});
    checks.push_back({probe_label("smoothed_below_pi", pr.t), above_pi <= 0.0, above_pi, 0.0});
    checks.push_back(
        {probe_label("smoothed_below_filtered", pr.t), above_filtered <= 0.0, above_filtered, 0.0});
  }
  const WhitenessReport& w = report.whiteness;
  checks.push_back({"quadratic_variation", w.relative_error <= 0.05, w.relative_error, 0.05});
  const double corr = w.increment_correlation.size() ? w.increment_correlation.cwiseAbs().maxCoeff()
                                                      : 0.0;
  checks.push_back(
      {"increment_correlation", corr <= 3.0 * w.correlation_se, corr, 3.0 * w.correlation_se});
  return checks;
}

void write_report_csv(std::ostream& os, const MonteCarloReport& report) {
  csv::write_row(os, std::vector<std::string>{"kind", "s", "t", "i", "j", "empirical",
                                              "predicted", "standard_error"});
  auto emit = [&](const std::string& kind, double s, double t, const Matrix& emp,
                  const Matrix& pred, const Matrix& se) {
    for (Eigen::Index i = 0; i < emp.rows(); ++i) {
      for (Eigen::Index j = 0; j < emp.cols(); ++j) {
        os << kind << ',';
        csv::write_row(os, std::vector<double>{s, t, static_cast<double>(i),
                                               static_cast<double>(j), emp(i, j), pred(i, j),
                                               se(i, j)});
      }
    }
  };
  for (const ProbeResult& pr : report.probes) {
    emit("smoothed", pr.t, pr.t, pr.smoothed, pr.kernel, pr.smoothed_se);
    emit("filtered", pr.t, pr.t, pr.filtered, pr.pi, pr.filtered_se);
  }
  for (std::size_t c = 0; c < report.cross.size(); ++c) {
    const CovarianceEstimate& ce = report.cross[c];
    emit("smoothed_cross", ce.s, ce.t, ce.mean, report.cross_kernel[c], ce.standard_error);
  }
  const WhitenessReport& w = report.whiteness;
  const Matrix corr_se = Matrix::Constant(w.increment_correlation.rows(),
                                          w.increment_correlation.cols(), w.correlation_se);
  emit("increment_correlation", w.split_time, w.split_time, w.increment_correlation,
       Matrix::Zero(corr_se.rows(), corr_se.cols()), corr_se);
}

namespace {

nlohmann::ordered_json to_json(const Matrix& m) {
  auto out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string report_json(const MonteCarloReport& report, const std::vector<Check>& checks) {
  nlohmann::ordered_json j;
  j["n_paths"] = report.n_paths;
  j["seed"] = report.seed;
  auto probes = nlohmann::ordered_json::array();
  for (const ProbeResult& pr : report.probes) {
    probes.push_back({{"t", pr.t},
                      {"kernel", to_json(pr.kernel)},
                      {"pi", to_json(pr.pi)},
                      {"smoothed", to_json(pr.smoothed)},
                      {"smoothed_se", to_json(pr.smoothed_se)},
                      {"filtered", to_json(pr.filtered)},
                      {"filtered_se", to_json(pr.filtered_se)}});
  }
  j["probes"] = std::move(probes);
  const WhitenessReport& w = report.whiteness;
  j["whiteness"] = {{"quadratic_variation", to_json(w.quadratic_variation)},
                    {"expected", to_json(w.expected)},
                    {"relative_error", w.relative_error},
                    {"split_time", w.split_time},
                    {"increment_correlation", to_json(w.increment_correlation)},
                    {"correlation_se", w.correlation_se}};
  auto list = nlohmann::ordered_json::array();
  bool all = true;
  for (const Check& c : checks) {
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.bound}});
    all = all && c.passed;
  }
  j["checks"] = std::move(list);
  j["passed"] = all;
  return j.dump(2) + "\n";
}

}  // namespace greenfilter
