// Reference systems shared by the unit and acceptance tests.
#pragma once

#include <random>

#include "greenfilter/model.hpp"

namespace greenfilter::testing {

struct Spec {
  Matrix F, G, Q, H, R, Pi0, SigmaT;
  double t0 = 0.0;
  double T = 1.0;
  std::size_t n_steps = 1000;
};

inline LtvModel build(const Spec& s) {
  LtvModel m;
  m.grid = TimeGrid(s.t0, s.T, s.n_steps);
  m.F = MatrixSchedule::constant(s.F);
  m.G = MatrixSchedule::constant(s.G);
  m.Q = MatrixSchedule::constant(s.Q);
  m.H = MatrixSchedule::constant(s.H);
  m.R = MatrixSchedule::constant(s.R);
  m.f = MatrixSchedule::constant(Matrix::Zero(s.F.rows(), 1));
  m.h = MatrixSchedule::constant(Matrix::Zero(s.H.rows(), 1));
  m.x0 = Vector::Zero(s.F.rows());
  m.y0 = Vector::Zero(s.H.rows());
  m.Pi0 = s.Pi0;
  m.SigmaT = s.SigmaT;
  return m;
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// F=0, G=Q=H=R=1, Pi0=0, SigmaT=0 on [0,1]: Pi(t) = tanh(t).
inline Spec s1_spec(std::size_t n_steps = 1000) {
  return {scalar(0), scalar(1), scalar(1), scalar(1), scalar(1), scalar(0), scalar(0),
          0.0, 1.0, n_steps};
}
inline LtvModel s1(std::size_t n_steps = 1000) { return build(s1_spec(n_steps)); }

/// Brownian motion, no observations: K(s,t) = min(s,t).
inline LtvModel b1(std::size_t n_steps = 1000) {
  auto s = s1_spec(n_steps);
  s.H = scalar(0);
  return build(s);
}

/// Pure observation, no plant noise: Lambda(s,t) = T - max(s,t).
inline LtvModel o1(std::size_t n_steps = 1000) {
  auto s = s1_spec(n_steps);
  s.G = scalar(0);
  return build(s);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                            double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const Matrix b = random_matrix(rng, n, n, 0.6);
  return b * b.transpose() + floor * Matrix::Identity(n, n);
}

/// Random stable time-invariant system with SigmaT = 0.
inline Spec random_spec(std::uint64_t seed, Eigen::Index n, Eigen::Index p, Eigen::Index m,
                        std::size_t n_steps = 1000) {
  std::mt19937_64 rng(seed);
  Spec s;
  Matrix a = random_matrix(rng, n, n, 0.7);
  const double shift = a.eigenvalues().real().maxCoeff();
  s.F = a - (shift + 0.3) * Matrix::Identity(n, n);
  s.G = random_matrix(rng, n, p, 0.8);
  s.Q = random_spd(rng, p, 0.2);
  s.H = random_matrix(rng, m, n, 0.8);
  s.R = random_spd(rng, m, 0.3);
  s.Pi0 = random_spd(rng, n, 0.05);
  s.SigmaT = Matrix::Zero(n, n);
  s.n_steps = n_steps;
  return s;
}

inline LtvModel random_system(std::uint64_t seed, Eigen::Index n, Eigen::Index p,
                              Eigen::Index m, std::size_t n_steps = 1000) {
  return build(random_spec(seed, n, p, m, n_steps));
}

}  // namespace greenfilter::testing
