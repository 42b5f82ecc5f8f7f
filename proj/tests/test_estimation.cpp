#include <doctest.h>

#include <cmath>
#include <sstream>

#include "greenfilter/mcsim.hpp"
#include "support/systems.hpp"

using namespace greenfilter;
using greenfilter::testing::scalar;

namespace {

double sup_gap(const VectorPath& a, const VectorPath& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return worst;
}

ObservationPath sample_path(const LtvModel& m, std::uint32_t path, std::uint64_t seed = 3) {
  const PathSimulator sim(m, seed);
  VectorPath x, dy;
  sim.simulate(path, x, dy);
  ObservationPath obs{m.grid, VectorPath(m.grid.size())};
  obs.y[0] = m.y0;
  for (std::size_t k = 0; k < dy.size(); ++k) obs.y[k + 1] = obs.y[k] + dy[k];
  return obs;
}

LtvModel with_drift(LtvModel m) {
  m.f = MatrixSchedule::constant(Matrix::Constant(m.n(), 1, 0.4));
  m.h = MatrixSchedule::constant(Matrix::Constant(m.m(), 1, -0.2));
  m.x0 = Vector::Constant(m.n(), 0.3);
  return m;
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("mean paths") {
    for (const Vector& v : mean_paths(testing::s1()).x_bar) CHECK(v.norm() == 0.0);

    auto spec = testing::s1_spec();
    LtvModel ramp = testing::build(spec);
    ramp.f = MatrixSchedule::constant(scalar(1));
    const MeanPaths r = mean_paths(ramp);
    for (std::size_t k = 0; k < ramp.grid.size(); k += 100) {
      CHECK(std::abs(r.x_bar[k](0) - ramp.grid[k]) < 1e-12);
    }

    spec.F = scalar(-0.8);
    LtvModel decay = testing::build(spec);
    decay.x0 = Vector::Constant(1, 1.0);
    const MeanPaths d = mean_paths(decay);
    CHECK(std::abs(d.x_bar.back()(0) - std::exp(-0.8)) < 1e-8);
  }

  TEST_CASE("mean observations leave the filter on the mean") {
    const LtvModel m = with_drift(testing::random_system(2, 2, 1, 1));
    const MeanPaths means = mean_paths(m);
    ObservationPath obs{m.grid, VectorPath(m.grid.size())};
    obs.y[0] = m.y0;
    for (std::size_t k = 0; k + 1 < m.grid.size(); ++k) {
      obs.y[k + 1] = obs.y[k] + m.grid.step() * (m.H.at(m.grid[k]) * means.x_bar[k] + m.h.at(m.grid[k]).col(0));
    }
    const KernelField f(m);
    const FilterResult r = kalman_filter(m, f.riccati(), obs);
    for (const Vector& v : r.r_path) CHECK(v.norm() < 1e-12);
    CHECK(sup_gap(r.filtered, means.x_bar) < 1e-12);
    CHECK(sup_gap(smooth_via_kernel_route(m, f, obs), means.x_bar) < 1e-12);
  }

  TEST_CASE("no observations: everything stays on the mean") {
    LtvModel m = with_drift(testing::b1());
    const KernelField f(m);
    const ObservationPath obs = sample_path(m, 0);
    const FilterResult r = kalman_filter(m, f.riccati(), obs);
    const VectorPath s = rts_smooth(m, f.riccati(), r);
    const VectorPath x_bar = mean_paths(m).x_bar;
    CHECK(sup_gap(r.filtered, x_bar) < 1e-14);
    CHECK(sup_gap(s, x_bar) < 1e-14);
    CHECK(optimal_gain(f, 0.5, 0.5).norm() == 0.0);
  }

  TEST_CASE("kernel route with zero kernel returns the mean") {
    LtvModel m = with_drift(testing::o1());
    const KernelField f(m);
    CHECK(sup_gap(smooth_via_kernel_route(m, f, sample_path(m, 1)), mean_paths(m).x_bar) < 1e-14);
  }

  TEST_CASE("optimal gain examples") {
    const KernelField f(testing::s1());
    CHECK(std::abs(optimal_gain(f, 1.0, 1.0)(0, 0) - std::tanh(1.0)) < 1e-6);
    for (double t : {0.0, 0.3, 0.8}) {
      CHECK(std::abs(optimal_gain(f, 1.0, t)(0, 0) - kernel_K(f, 1.0, t)(0, 0)) < 1e-14);
    }
  }

  TEST_CASE("innovation and kernel routes agree") {
    for (int which = 0; which < 2; ++which) {
      const LtvModel m = with_drift(which == 0 ? testing::s1() : testing::random_system(17, 2, 2, 1));
      const KernelField f(m);
      double gap = 0.0;
      double endpoint = 0.0;
      for (std::uint32_t q = 0; q < 20; ++q) {
        const ObservationPath obs = sample_path(m, q);
        const FilterResult r = kalman_filter(m, f.riccati(), obs);
        const VectorPath rts = rts_smooth(m, f.riccati(), r);
        gap = std::max(gap, sup_gap(rts, smooth_via_kernel_route(m, f, obs)));
        endpoint = std::max(endpoint, (rts.back() - r.filtered.back()).cwiseAbs().maxCoeff());
      }
      CHECK(gap < 1e-5);
      CHECK(endpoint < 1e-8);
    }
  }

  TEST_CASE("smoother is linear in the centered increments") {
    const LtvModel m = testing::random_system(19, 2, 2, 1, 500);
    const KernelField f(m);
    const ObservationPath a = sample_path(m, 0);
    const ObservationPath b = sample_path(m, 1);
    ObservationPath c{m.grid, VectorPath(m.grid.size())};
    for (std::size_t k = 0; k < m.grid.size(); ++k) c.y[k] = 2.0 * a.y[k] - 0.5 * b.y[k];
    auto smooth = [&](const ObservationPath& o) {
      return rts_smooth(m, f.riccati(), kalman_filter(m, f.riccati(), o));
    };
    const VectorPath sa = smooth(a);
    const VectorPath sb = smooth(b);
    const VectorPath sc = smooth(c);
    VectorPath combo(sa.size());
    for (std::size_t k = 0; k < sa.size(); ++k) combo[k] = 2.0 * sa[k] - 0.5 * sb[k];
    CHECK(sup_gap(sc, combo) < 1e-10);
  }

  TEST_CASE("kernel-route precondition") {
    auto spec = testing::s1_spec(100);
    spec.SigmaT = scalar(0.5);
    const LtvModel m = testing::build(spec);
    const KernelField f(m);
    CHECK_THROWS_AS(smooth_via_kernel_route(m, f, sample_path(m, 0)), Error);
    CHECK_THROWS_AS(optimal_gain(f, 0.5, 0.5), Error);
    CHECK_NOTHROW(run_smoother(f, sample_path(m, 0)));
  }

  TEST_CASE("observation CSV round trip") {
    const LtvModel m = testing::random_system(23, 2, 1, 2, 20);
    const ObservationPath obs = sample_path(m, 4);
    std::stringstream io;
    write_observations(io, obs);
    const ObservationPath back = read_observations(io, m);
    CHECK(sup_gap(back.y, obs.y) == 0.0);

    std::stringstream short_csv("t,y_0,y_1\n0,1,2\n");
    CHECK_THROWS_AS(read_observations(short_csv, m), Error);
    std::stringstream wrong_cols("t,y_0\n0,1\n");
    CHECK_THROWS_AS(read_observations(wrong_cols, m), Error);
  }

  TEST_CASE("smoother report") {
    const LtvModel m = testing::s1(50);
    const KernelField f(m);
    const SmootherResult r = run_smoother(f, sample_path(m, 2));
    CHECK(std::abs(r.smoothed_cov_diag.back()(0) - std::tanh(1.0)) < 1e-6);
    std::ostringstream os;
    write_smoother_csv(os, m.grid, r);
    CHECK(os.str().rfind("t,filtered_0,smoothed_0,K_diag_0\n", 0) == 0);
  }
}
