#include <doctest.h>

#include <cmath>
#include <random>

#include "greenfilter/verify.hpp"
#include "support/systems.hpp"

using namespace greenfilter;
using greenfilter::testing::scalar;

namespace {

Vector one() { return Vector::Constant(1, 1.0); }

/// Max over panels of |dx/dt - (F x + G Q^1/2 u)| using one-sided controls.
double dynamics_residual(const TrajectoryElement& x, const LtvModel& m) {
  const auto& rep = x.representative();
  const double h = m.grid.step();
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < m.grid.size(); ++k) {
    const double a = m.grid[k];
    const double b = m.grid[k + 1];
    const Matrix ba = m.G.at(a) * psd_sqrt(m.Q.at(a));
    const Matrix bb = m.G.at(b) * psd_sqrt(m.Q.at(b));
    const Vector drift = 0.5 * (m.F.at(a) * x.x_path[k] + ba * rep.u.right[k] +
                                m.F.at(b) * x.x_path[k + 1] + bb * rep.u.left[k + 1]);
    worst = std::max(worst, ((x.x_path[k + 1] - x.x_path[k]) / h - drift).cwiseAbs().maxCoeff());
  }
  return worst;
}

double integral_rinv(const VectorPath& y, const LtvModel& m) {
  MatrixPath v(m.grid.size());
  for (std::size_t k = 0; k < m.grid.size(); ++k) {
    v[k] = Matrix::Constant(1, 1, y[k].dot(m.Rinv(m.grid[k]) * y[k]));
  }
  return trapezoid(v, m.grid)(0, 0);
}

}  // namespace

TEST_SUITE("rkhs") {
  TEST_CASE("kernel sections of the scalar models") {
    const LtvModel b = testing::b1();
    const KernelField fb(b);
    const TrajectoryElement sec = kernel_section(fb, 1.0, one());
    for (std::size_t k = 0; k < b.grid.size(); k += 50) {
      CHECK(std::abs(sec.x_path[k](0) - b.grid[k]) < 1e-12);
      const auto& u = sec.representative().u;
      CHECK(std::abs((k < b.grid.n_steps() ? u.right[k] : u.left[k])(0) - 1.0) < 1e-12);
    }
    CHECK(sec.representative().xi.norm() == 0.0);
    CHECK(std::abs(inner_product_x(sec, sec, b) - 1.0) < 1e-10);

    const LtvModel o = testing::o1();
    const KernelField fo(o);
    const TrajectoryElement zero = kernel_section(fo, 0.4, one());
    for (const Vector& v : zero.x_path) CHECK(v.norm() == 0.0);
    CHECK(inner_product_x(zero, zero, o) == 0.0);
    const InformationElement lsec = lambda_section(fo, 0.0, one());
    CHECK(std::abs(inner_product_lambda(lsec, lsec, o) - 1.0) < 1e-8);

    const LtvModel s = testing::s1();
    CHECK(dynamics_residual(kernel_section(KernelField(s), 0.5, one()), s) < 1e-6);
  }

  TEST_CASE("reproducing property between sections") {
    const LtvModel s = testing::s1(2000);
    const KernelField f(s);
    for (auto [a, b] : {std::pair{0.25, 0.75}, std::pair{0.9, 0.1}, std::pair{0.5, 0.5}}) {
      const double want = kernel_K(f, a, b)(0, 0);
      CHECK(std::abs(inner_product_x(kernel_section(f, a, one()), kernel_section(f, b, one()), s) -
                     want) < 1e-4 * want);
      const double lwant = kernel_Lambda(f, a, b)(0, 0);
      CHECK(std::abs(inner_product_lambda(lambda_section(f, a, one()), lambda_section(f, b, one()),
                                          s) -
                     lwant) < 1e-4 * lwant);
    }
  }

  TEST_CASE("random elements reproduce in both spaces") {
    for (std::uint64_t seed : {3u, 4u}) {
      const KernelField f(testing::random_system(seed, 2, 2, 1, 2000));
      const RkhsSummary sum = rkhs_summary(f, seed);
      CHECK(sum.reproducing_x < 1e-4);
      CHECK(sum.norm_x < 1e-4);
      CHECK(sum.reproducing_lambda < 1e-4);
      CHECK(sum.primal_derivative < 1e-5);
      CHECK(sum.stationarity < 1e-5);
    }
  }

  TEST_CASE("constructed elements satisfy their dynamics") {
    const LtvModel m = testing::random_system(12, 3, 2, 2, 1000);
    std::mt19937_64 rng(12);
    const TrajectoryElement x =
        make_trajectory(m, random_vector(rng, 3), random_smooth_path(rng, m.grid, 2));
    CHECK(dynamics_residual(x, m) < 1e-4);
    CHECK((x.x_path[0] - psd_sqrt(m.Pi0) * x.representative().xi).norm() < 1e-12);
    const InformationElement lam =
        make_information(m, random_vector(rng, 3), random_smooth_path(rng, m.grid, 2));
    CHECK((lam.lambda_path.back() - psd_sqrt(m.SigmaT) * lam.representative().z).norm() < 1e-12);
  }

  TEST_CASE("zero elements and missing representatives") {
    const LtvModel s = testing::s1(100);
    const VectorPath zeros(s.grid.size(), Vector::Zero(1));
    const TrajectoryElement x = make_trajectory(s, Vector::Zero(1), zeros);
    CHECK(inner_product_x(x, x, s) == 0.0);
    const InformationElement lam = make_information(s, Vector::Zero(1), zeros);
    CHECK(inner_product_lambda(lam, lam, s) == 0.0);
    TrajectoryElement bare{s.grid, zeros, std::nullopt};
    CHECK_THROWS_AS(inner_product_x(bare, x, s), Error);
  }

  TEST_CASE("smoother output and objectives") {
    const LtvModel s = testing::s1(1000);
    const KernelField f(s);
    const VectorPath zeros(s.grid.size(), Vector::Zero(1));
    const TrajectoryElement none = smooth_kernel(f, zeros);
    for (const Vector& v : none.x_path) CHECK(v.norm() == 0.0);
    CHECK(primal_objective(none, zeros, s) == 0.0);

    std::mt19937_64 rng(2);
    const VectorPath y = random_smooth_path(rng, s.grid, 1);
    const KernelField blind(testing::b1());
    for (const Vector& v : smooth_kernel(blind, y).x_path) CHECK(v.norm() == 0.0);

    CHECK(std::abs(primal_objective(none, y, s) - integral_rinv(y, s)) < 1e-12);
    const TrajectoryElement x = make_trajectory(s, Vector::Zero(1), random_smooth_path(rng, s.grid, 1));
    CHECK(std::abs(primal_objective(x, y, s, PrimalForm::Expanded) -
                   primal_objective(x, y, s, PrimalForm::Residual)) < 1e-9);
  }

  TEST_CASE("dual element") {
    const LtvModel s = testing::s1(1000);
    const KernelField f(s);
    const VectorPath zeros(s.grid.size(), Vector::Zero(1));
    const InformationElement none = dual_from_primal(smooth_kernel(f, zeros), zeros, s);
    for (const Vector& v : none.lambda_path) CHECK(v.norm() == 0.0);
    CHECK(dual_objective(none, zeros, s) == 0.0);

    std::mt19937_64 rng(7);
    const VectorPath y = random_smooth_path(rng, s.grid, 1);
    const TrajectoryElement x_hat = smooth_kernel(f, y);
    CHECK(stationarity_residual(dual_from_primal(x_hat, y, s), x_hat, y, s) < 1e-5);

    auto spec = testing::random_spec(3, 2, 2, 2);
    spec.H = Matrix::Identity(2, 2);
    const LtvModel sq = testing::build(spec);
    const KernelField fsq(sq);
    const VectorPath y2 = random_smooth_path(rng, sq.grid, 2);
    const TrajectoryElement xs = smooth_kernel(fsq, y2);
    const InformationElement lam = dual_from_primal(xs, y2, sq);
    const Matrix r_inv = sq.Rinv(0.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < sq.grid.size(); k += 37) {
      worst = std::max(worst, (lam.representative().v.right[k] - r_inv * (y2[k] - xs.x_path[k]))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    CHECK(worst < 1e-10);
  }

  TEST_CASE("dual objective without observations") {
    auto spec = testing::s1_spec(500);
    spec.H = scalar(0);
    spec.SigmaT = scalar(0.5);
    const LtvModel m = testing::build(spec);
    std::mt19937_64 rng(1);
    const VectorPath y = random_smooth_path(rng, m.grid, 1);
    const InformationElement lam = make_information(m, one(), random_smooth_path(rng, m.grid, 1));
    CHECK(std::abs(dual_objective(lam, y, m) -
                   (inner_product_lambda(lam, lam, m) - integral_rinv(y, m))) < 1e-10);
  }

  TEST_CASE("observation split") {
    auto spec = testing::random_spec(5, 3, 1, 2, 50);
    spec.H.row(1) = 2.0 * spec.H.row(0);
    const LtvModel m = testing::build(spec);
    std::mt19937_64 rng(5);
    const VectorPath y = random_smooth_path(rng, m.grid, 2);
    const ObservationSplit split = split_observation(m, y);
    for (std::size_t k = 0; k < m.grid.size(); ++k) {
      const Matrix H = m.H.at(m.grid[k]);
      CHECK((H.transpose() * split.v_kernel[k]).norm() < 1e-10);
      CHECK((split.v_image[k] + split.v_kernel[k] - m.Rinv(m.grid[k]) * y[k]).norm() < 1e-10);
    }
  }

  TEST_CASE("mirrored model reproduces Lambda") {
    auto spec = testing::random_spec(14, 2, 2, 1, 600);
    std::mt19937_64 rng(14);
    spec.SigmaT = testing::random_spd(rng, 2);
    const LtvModel m = testing::build(spec);
    const KernelField f(m);
    const KernelField mirrored(mirror_model(m));
    double gap = 0.0;
    for (std::size_t i : spread_indices(m.grid, 16)) {
      for (std::size_t j : spread_indices(m.grid, 16)) {
        gap = std::max(gap, (f.Lambda(i, j) - mirrored.K(600 - i, 600 - j)).cwiseAbs().maxCoeff());
      }
    }
    CHECK(gap < 1e-8);
  }

  TEST_CASE("element arithmetic keeps representatives") {
    const KernelField f(testing::s1(200));
    const TrajectoryElement a = kernel_section(f, 0.3, one());
    const TrajectoryElement b = kernel_section(f, 0.8, one());
    const TrajectoryElement c = a + 2.0 * b;
    const double want = f.K(60, 60)(0, 0) + 4.0 * f.K(60, 160)(0, 0) + 4.0 * f.K(160, 160)(0, 0);
    CHECK(std::abs(inner_product_x(c, c, f.model()) - want) < 1e-3 * want);
  }
}
