#include <doctest.h>

#include <cmath>
#include <random>

#include "greenfilter/numcore.hpp"
#include "support/systems.hpp"

using namespace greenfilter;
using greenfilter::testing::random_matrix;
using greenfilter::testing::random_spd;

namespace {
double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }
Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}
}  // namespace

TEST_SUITE("numcore") {
  TEST_CASE("time grid is uniform and rejects off-grid lookups") {
    const TimeGrid g(0.0, 1.0, 4);
    CHECK(g.size() == 5);
    CHECK(g.step() == doctest::Approx(0.25));
    CHECK(g.index_of(0.5) == 2);
    CHECK_THROWS_AS(g.index_of(0.3), Error);
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 4), Error);
  }

  TEST_CASE("psd_sqrt examples") {
    CHECK(max_abs(psd_sqrt(Matrix::Identity(2, 2)) - Matrix::Identity(2, 2)) < 1e-14);
    CHECK(max_abs(psd_sqrt(diag2(4, 9)) - diag2(2, 3)) < 1e-14);
    CHECK(max_abs(psd_sqrt(diag2(1, -1e-12)) - diag2(1, 0)) < 1e-14);
  }

  TEST_CASE("psd_sqrt squares back on random SPD inputs") {
    std::mt19937_64 rng(1);
    for (Eigen::Index n = 1; n <= 8; ++n) {
      const Matrix a = random_spd(rng, n);
      const Matrix s = psd_sqrt(a);
      CHECK(max_abs(s - s.transpose()) < 1e-12);
      CHECK(min_eigenvalue(s) >= -1e-12);
      CHECK(max_abs(s * s - a) < 1e-10);
    }
  }

  TEST_CASE("pinv examples and Penrose identity") {
    CHECK(max_abs(pinv(diag2(2, 0)) - diag2(0.5, 0)) < 1e-14);
    CHECK(max_abs(pinv(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) < 1e-14);
    std::mt19937_64 rng(2);
    const Matrix m = random_matrix(rng, 3, 2);
    CHECK(max_abs(pinv(m) * m - Matrix::Identity(2, 2)) < 1e-10);
    const Matrix r = random_matrix(rng, 4, 2) * random_matrix(rng, 2, 5);
    CHECK(max_abs(r * pinv(r) * r - r) < 1e-9);
  }

  TEST_CASE("expm examples") {
    CHECK(max_abs(expm(Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)) < 1e-15);
    Matrix n(2, 2);
    n << 0, 1, 0, 0;
    Matrix want(2, 2);
    want << 1, 1, 0, 1;
    CHECK(max_abs(expm(n) - want) < 1e-14);
    CHECK(max_abs(expm(diag2(1, -1)) - diag2(std::exp(1.0), std::exp(-1.0))) < 1e-12);
  }

  TEST_CASE("expm of commuting sum factorizes") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix a = random_matrix(rng, 4, 4, 0.5);
      const Matrix b = 0.3 * a * a - 0.7 * a + 0.2 * Matrix::Identity(4, 4);
      CHECK(max_abs(expm(a + b) - expm(a) * expm(b)) < 1e-9);
    }
  }

  TEST_CASE("rk4 examples") {
    const TimeGrid g(0.0, 1.0, 1000);
    auto grow = [](double, const Matrix& x) { return x; };
    auto decay = [](double, const Matrix& x) { return Matrix(-x); };
    auto still = [](double, const Matrix& x) { return Matrix(Matrix::Zero(x.rows(), x.cols())); };
    const Matrix one = Matrix::Constant(1, 1, 1.0);
    CHECK(std::abs(rk4_integrate(grow, one, g, Direction::Forward).back()(0, 0) - std::exp(1.0)) <
          1e-10);
    CHECK(std::abs(rk4_integrate(decay, one, g, Direction::Backward).front()(0, 0) -
                   std::exp(1.0)) < 1e-10);
    for (const Matrix& x : rk4_integrate(still, one, g, Direction::Forward)) CHECK(x(0, 0) == 1.0);
  }

  TEST_CASE("rk4 converges at fourth order on linear systems") {
    std::mt19937_64 rng(4);
    const Matrix a = random_matrix(rng, 3, 3);
    const Matrix x0 = random_matrix(rng, 3, 1);
    const Matrix exact = expm(a) * x0;
    auto rhs = [&](double, const Matrix& x) { return Matrix(a * x); };
    const double e1 = max_abs(rk4_integrate(rhs, x0, TimeGrid(0, 1, 20), Direction::Forward).back() - exact);
    const double e2 = max_abs(rk4_integrate(rhs, x0, TimeGrid(0, 1, 40), Direction::Forward).back() - exact);
    CHECK(e1 / e2 >= 12.0);
    MESSAGE("observed order " << std::log2(e1 / e2));
  }

  TEST_CASE("trapezoid examples") {
    const TimeGrid g(0.0, 1.0, 1000);
    MatrixPath ones(g.size(), Matrix::Constant(1, 1, 1.0));
    MatrixPath lin(g.size());
    MatrixPath sq(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      lin[k] = Matrix::Constant(1, 1, g[k]);
      sq[k] = Matrix::Constant(1, 1, g[k] * g[k]);
    }
    CHECK(trapezoid(ones, g)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(trapezoid(lin, g)(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(trapezoid(sq, g)(0, 0) - 1.0 / 3.0) < 1e-6);
    const TimeGrid coarse(0.0, 1.0, 3);
    MatrixPath lin3(coarse.size());
    for (std::size_t k = 0; k < coarse.size(); ++k) lin3[k] = Matrix::Constant(1, 1, coarse[k]);
    CHECK(std::abs(trapezoid(lin3, coarse)(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(cumulative_trapezoid(lin, g)[500](0, 0) - 0.125) < 1e-14);
  }

  TEST_CASE("simpson is exact on cubics for even and odd panel counts") {
    for (std::size_t n : {2u, 3u, 7u, 10u}) {
      const TimeGrid g(0.0, 2.0, n);
      MatrixPath cube(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) cube[k] = Matrix::Constant(1, 1, g[k] * g[k] * g[k]);
      CHECK(std::abs(simpson(cube, g)(0, 0) - 4.0) < 1e-13);
    }
    const TimeGrid g(0.0, 1.0, 999);
    MatrixPath e(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) e[k] = Matrix::Constant(1, 1, std::exp(g[k]));
    CHECK(std::abs(simpson(e, g)(0, 0) - (std::exp(1.0) - 1.0)) < 1e-12);
  }

  TEST_CASE("hermite reproduces cubics") {
    auto f = [](double t) { return Matrix::Constant(1, 1, t * t * t - t); };
    auto df = [](double t) { return Matrix::Constant(1, 1, 3 * t * t - 1); };
    const double a = 0.2;
    const double h = 0.5;
    for (double theta : {0.0, 0.3, 0.7, 1.0}) {
      CHECK(std::abs(hermite(f(a), df(a), f(a + h), df(a + h), h, theta)(0, 0) -
                     f(a + theta * h)(0, 0)) < 1e-14);
    }
  }

  TEST_CASE("condition number flags singular matrices") {
    CHECK(condition_number(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    CHECK(condition_number(diag2(1, 0)) > 1e15);
  }
}
