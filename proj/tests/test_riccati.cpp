#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "greenfilter/riccati.hpp"
#include "support/systems.hpp"

using namespace greenfilter;
using greenfilter::testing::scalar;

namespace {
double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_SUITE("riccati") {
  TEST_CASE("scalar model has tanh solutions") {
    const LtvModel m = testing::s1();
    const RiccatiSolution r = solve_riccati(m);
    CHECK(std::abs(r.pi_path.back()(0, 0) - std::tanh(1.0)) < 1e-8);
    CHECK(std::abs(r.sigma_path.front()(0, 0) - std::tanh(1.0)) < 1e-8);
    double worst = 0.0;
    for (std::size_t k = 0; k < m.grid.size(); ++k) {
      worst = std::max(worst, std::abs(r.pi_path[k](0, 0) - std::tanh(m.grid[k])));
      worst = std::max(worst, std::abs(r.sigma_path[k](0, 0) - std::tanh(1.0 - m.grid[k])));
    }
    CHECK(worst < 1e-8);
    CHECK(std::abs(r.pi_at(0.5005)(0, 0) - std::tanh(0.5005)) < 1e-8);
  }

  TEST_CASE("degenerate Riccati examples") {
    auto spec = testing::s1_spec();
    spec.G = scalar(0);
    const RiccatiSolution no_plant = solve_riccati(testing::build(spec));
    for (const Matrix& p : no_plant.pi_path) CHECK(p(0, 0) == 0.0);
    for (std::size_t k = 0; k < no_plant.grid.size(); ++k) {
      CHECK(std::abs(no_plant.sigma_path[k](0, 0) - (1.0 - no_plant.grid[k])) < 1e-12);
    }

    const LtvModel b = testing::b1();
    const RiccatiSolution blind = solve_riccati(b);
    for (std::size_t k = 0; k < b.grid.size(); ++k) {
      CHECK(std::abs(blind.pi_path[k](0, 0) - b.grid[k]) < 1e-12);
      CHECK(blind.sigma_path[k](0, 0) == 0.0);
    }
  }

  TEST_CASE("boundary values, symmetry and PSD on random systems") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto spec = testing::random_spec(seed, 3, 2, 2, 400);
      std::mt19937_64 rng(seed + 100);
      spec.SigmaT = testing::random_spd(rng, 3);
      const LtvModel m = testing::build(spec);
      const RiccatiSolution r = solve_riccati(m);
      CHECK(max_abs(r.pi_path.front() - m.Pi0) == 0.0);
      CHECK(max_abs(r.sigma_path.back() - m.SigmaT) == 0.0);
      for (std::size_t k = 0; k < m.grid.size(); ++k) {
        CHECK(max_abs(r.pi_path[k] - r.pi_path[k].transpose()) < 1e-8);
        CHECK(min_eigenvalue(r.pi_path[k]) >= -1e-8);
        CHECK(min_eigenvalue(r.sigma_path[k]) >= -1e-8);
      }
    }
  }

  TEST_CASE("transition examples") {
    auto spec = testing::s1_spec();
    spec.F = scalar(-0.7);
    const LtvModel m = testing::build(spec);
    const RiccatiSolution r = solve_riccati(m);
    for (TransitionKind kind :
         {TransitionKind::OpenLoop, TransitionKind::SigmaClosed, TransitionKind::PiClosed}) {
      CHECK(max_abs(transition(m, r, kind, 0.4, 0.4) - scalar(1)) == 0.0);
    }
    CHECK(std::abs(transition(m, r, TransitionKind::OpenLoop, 0.9, 0.2)(0, 0) -
                   std::exp(-0.7 * 0.7)) < 1e-8);

    const LtvModel s = testing::s1();
    const RiccatiSolution rs = solve_riccati(s);
    const TransitionFamily xi = build_transition(s, rs, TransitionKind::PiClosed);
    for (auto [a, b] : {std::pair{0.8, 0.1}, std::pair{0.3, 0.9}, std::pair{1.0, 0.0}}) {
      CHECK(std::abs(xi(a, b)(0, 0) - std::cosh(b) / std::cosh(a)) < 1e-6);
    }
  }

  TEST_CASE("cocycle property") {
    const LtvModel m = testing::random_system(7, 2, 1, 1, 300);
    const RiccatiSolution r = solve_riccati(m);
    for (TransitionKind kind :
         {TransitionKind::OpenLoop, TransitionKind::SigmaClosed, TransitionKind::PiClosed}) {
      const TransitionFamily f = build_transition(m, r, kind);
      CHECK(max_abs(f.fundamental(0) - Matrix::Identity(2, 2)) == 0.0);
      CHECK(f.worst_condition() < kMaxFundamentalCondition);
      double worst = 0.0;
      for (std::size_t a : {0u, 40u, 150u, 300u}) {
        for (std::size_t b : {10u, 150u, 299u}) {
          for (std::size_t c : {0u, 77u, 300u}) {
            worst = std::max(worst, max_abs(f.between(a, b) * f.between(b, c) - f.between(a, c)));
          }
        }
      }
      CHECK(worst < 1e-8);
    }
  }

  TEST_CASE("Sigma equals minus Pi inverse when the terminal weight matches") {
    for (int which = 0; which < 2; ++which) {
      auto spec = which == 0 ? testing::s1_spec() : testing::random_spec(11, 2, 2, 1);
      spec.Pi0 = Matrix::Identity(spec.F.rows(), spec.F.rows());
      const RiccatiSolution first = solve_riccati(testing::build(spec));
      spec.SigmaT = -first.pi_path.back().inverse();
      const RiccatiSolution r = solve_riccati(testing::build(spec));
      double worst = 0.0;
      for (std::size_t k = 0; k < r.grid.size(); ++k) {
        worst = std::max(worst, max_abs(r.sigma_path[k] + r.pi_path[k].inverse()));
      }
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("Sigma is bounded by the observability integral") {
    const LtvModel m = testing::random_system(13, 2, 2, 1, 500);
    const RiccatiSolution r = solve_riccati(m);
    const TransitionFamily phi = build_transition(m, r, TransitionKind::OpenLoop);
    const Matrix info = m.HtRinvH(0.0);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector g = testing::random_matrix(rng, 2, 1);
      for (std::size_t i : {0u, 100u, 250u, 450u}) {
        MatrixPath integrand(m.grid.size(), Matrix::Zero(1, 1));
        for (std::size_t k = i; k < m.grid.size(); ++k) {
          const Vector y = phi.between(k, i) * g;
          integrand[k](0, 0) = y.dot(info * y);
        }
        const double bound = trapezoid(integrand, m.grid)(0, 0);
        CHECK(g.dot(r.sigma_path[i] * g) <= bound + 1e-8);
      }
    }
  }

  TEST_CASE("path CSV carries full precision") {
    const LtvModel m = testing::s1(4);
    std::ostringstream os;
    write_path_csv(os, m.grid, solve_riccati(m).pi_path, "Pi");
    CHECK(os.str().rfind("t,Pi_0_0\n0,0\n", 0) == 0);
  }
}
