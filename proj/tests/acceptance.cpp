// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "greenfilter/verify.hpp"
#include "support/systems.hpp"

using namespace greenfilter;
namespace gt = greenfilter::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

ObservationPath sample_path(const LtvModel& m, std::uint32_t path, std::uint64_t seed) {
  const PathSimulator sim(m, seed);
  VectorPath x, dy;
  sim.simulate(path, x, dy);
  ObservationPath obs{m.grid, VectorPath(m.grid.size())};
  obs.y[0] = m.y0;
  for (std::size_t k = 0; k < dy.size(); ++k) obs.y[k + 1] = obs.y[k] + dy[k];
  return obs;
}

Outcome scalar_riccati() {
  const LtvModel m = gt::s1(1000);
  const auto start = Clock::now();
  const RiccatiSolution r = solve_riccati(m);
  const double elapsed = seconds_since(start);
  const double pi_err = std::abs(r.pi_path.back()(0, 0) - std::tanh(1.0));
  const double sigma_err = std::abs(r.sigma_path.front()(0, 0) - std::tanh(1.0));
  return {pi_err < 1e-8 && sigma_err < 1e-8 && elapsed < 0.1,
          fmt("|Pi(1)-tanh 1|=%.2e |Sigma(0)-tanh 1|=%.2e time=%.4fs", pi_err, sigma_err, elapsed)};
}

Outcome brownian_kernel() {
  const KernelField f(gt::b1(1000));
  double worst = 0.0;
  for (std::size_t i : spread_indices(f.grid(), 32)) {
    for (std::size_t j : spread_indices(f.grid(), 32)) {
      worst = std::max(worst, std::abs(f.K(i, j)(0, 0) - std::min(f.grid()[i], f.grid()[j])));
    }
  }
  return {worst < 1e-8, fmt("max |K-min(s,t)|=%.2e", worst)};
}

double identity_value(const std::vector<Check>& checks, const std::string& name) {
  for (const Check& c : checks) {
    if (c.name == name) return c.value;
  }
  return std::numeric_limits<double>::infinity();
}

Outcome diagonal_identities() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s <= 5; ++s) {
    const KernelField f(s == 0 ? gt::s1() : gt::random_system(100 + s, 2, 2, 1));
    const auto checks = verify_identities(f, s);
    worst = std::max({worst, identity_value(checks, "terminal_kernel_equals_pi"),
                      identity_value(checks, "diagonal_identity")});
  }
  return {worst < 1e-6, fmt("max error=%.2e over S1 + 5 systems", worst)};
}

Outcome route_agreement() {
  const auto start = Clock::now();
  double bf = 0.0;
  double ham = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const KernelField f(gt::random_system(200 + s, s % 2 ? 3 : 2, 2, 1));
    const auto idx = spread_indices(f.grid(), 16);
    for (std::size_t i : idx) {
      for (std::size_t j : idx) {
        const Matrix k = f.K(i, j);
        bf = std::max(bf, max_abs(k - f.K_bf(i, j)));
        ham = std::max(ham, max_abs(k - f.K_hamiltonian(i, j)));
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {bf < 1e-5 && ham < 1e-5 && elapsed < 10.0,
          fmt("BF gap=%.2e Hamiltonian gap=%.2e time=%.2fs", bf, ham, elapsed)};
}

Outcome bvp_oracle() {
  double worst = 0.0;
  for (const LtvModel& m : {gt::s1(), gt::random_system(300, 2, 2, 1)}) {
    worst = std::max(worst, bvp_oracle_error(KernelField(m), 5, 10));
  }
  return {worst < 1e-4, fmt("max relative L2 error=%.2e", worst)};
}

Outcome riccati_duality() {
  double corrected = 0.0;
  double literal = 0.0;
  for (auto spec : {gt::s1_spec(), gt::random_spec(400, 2, 2, 1)}) {
    spec.Pi0 = Matrix::Identity(spec.F.rows(), spec.F.rows());
    const Matrix pi_T = solve_pi(gt::build(spec)).back();
    for (double sign : {-1.0, 1.0}) {
      spec.SigmaT = sign * pi_T.inverse();
      const RiccatiSolution r = solve_riccati(gt::build(spec));
      double& worst = sign < 0 ? corrected : literal;
      for (std::size_t k = 0; k < r.pi_path.size(); ++k) {
        worst = std::max(worst, max_abs(r.sigma_path[k] - sign * r.pi_path[k].inverse()));
      }
    }
  }
  return {corrected < 1e-6, fmt("max |Sigma + Pi^-1|=%.2e with SigmaT=-Pi(T)^-1 (|Sigma - Pi^-1| with "
                                "SigmaT=+Pi(T)^-1: %.2e)",
                                corrected, literal)};
}

Outcome reproducing() {
  double x = 0.0;
  double lam = 0.0;
  for (const LtvModel& m : {gt::s1(2000), gt::random_system(500, 2, 2, 1, 2000)}) {
    const RkhsSummary s = rkhs_summary(KernelField(m), 7, 20, 0);
    x = std::max({x, s.reproducing_x, s.norm_x});
    lam = std::max(lam, s.reproducing_lambda);
  }
  return {x < 1e-4 && lam < 1e-4, fmt("trajectory=%.2e information=%.2e", x, lam)};
}

Outcome optimality() {
  double d = 0.0;
  double st = 0.0;
  double gap = 0.0;
  for (const LtvModel& m : {gt::s1(), gt::random_system(600, 2, 2, 1)}) {
    const RkhsSummary s = rkhs_summary(KernelField(m), 8, 0, 10);
    d = std::max(d, s.primal_derivative);
    st = std::max(st, s.stationarity);
    gap = std::max(gap, std::abs(s.duality_gap));
  }
  return {d < 1e-5 && st < 1e-5,
          fmt("directional derivative=%.2e stationarity=%.2e (duality gap %.2e, reported)", d, st, gap)};
}

Outcome route_equivalence() {
  double worst = 0.0;
  for (const LtvModel& m : {gt::s1(), gt::random_system(700, 2, 2, 1)}) {
    const KernelField f(m);
    for (std::uint32_t q = 0; q < 20; ++q) {
      const ObservationPath obs = sample_path(m, q, 9);
      const VectorPath rts = rts_smooth(m, f.riccati(), kalman_filter(m, f.riccati(), obs));
      const VectorPath kr = smooth_via_kernel_route(m, f, obs);
      for (std::size_t k = 0; k < rts.size(); ++k) worst = std::max(worst, max_abs(rts[k] - kr[k]));
    }
  }
  return {worst < 1e-5, fmt("sup-norm gap=%.2e", worst)};
}

MonteCarloReport mc_report;
std::vector<Check> mc_checks;
double mc_seconds = 0.0;

void run_monte_carlo_once() {
  const KernelField f(gt::s1());
  MonteCarloConfig c;
  c.n_paths = 20000;
  c.seed = 2026;
  c.probes = {0.25, 0.5, 0.75, 1.0};
  c.threads = 1;
  const auto start = Clock::now();
  mc_checks = verify_montecarlo(f, c, &mc_report);
  mc_seconds = seconds_since(start);
}

Outcome covariance() {
  double rel = 0.0;
  double se = 0.0;
  double above_pi = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (const Check& c : mc_checks) {
    const bool covariance = c.name.rfind("covariance_", 0) == 0 || c.name.rfind("smoothed_below_pi", 0) == 0;
    if (covariance) ok = ok && c.passed;
    if (c.name.rfind("covariance_relative", 0) == 0) rel = std::max(rel, c.value);
    if (c.name.rfind("covariance_standard_errors", 0) == 0) se = std::max(se, c.value);
    if (c.name.rfind("smoothed_below_pi", 0) == 0) above_pi = std::max(above_pi, c.value);
  }
  ok = ok && mc_seconds < 180.0;
  return {ok, fmt("max relative=%.3f max SE multiple=%.2f time=%.1fs", rel, se, mc_seconds) +
                  fmt(" worst smoothed-(Pi+3SE)=%.2e", above_pi)};
}

Outcome whiteness() {
  const WhitenessReport& w = mc_report.whiteness;
  const double corr = max_abs(w.increment_correlation);
  const bool ok = w.relative_error < 0.05 && corr < 3.0 * w.correlation_se;
  return {ok, fmt("quadratic variation error=%.4f |corr|=%.4f (3 SE=%.4f)", w.relative_error, corr,
                  3.0 * w.correlation_se)};
}

Outcome gramians() {
  auto c = gt::random_spec(800, 3, 2, 1);
  c.Pi0.setZero();
  c.H.setZero();
  const LtvModel cm = gt::build(c);
  const double ctrl = max_abs(controllability_gramian(cm) - KernelField(cm).K(1000, 1000));

  auto o = gt::random_spec(801, 3, 2, 2);
  o.Pi0.setZero();
  o.G.setZero();
  o.R = Matrix::Identity(2, 2);
  const LtvModel om = gt::build(o);
  const double obs = max_abs(observability_gramian(om) - KernelField(om).Lambda(0, 0));
  return {ctrl < 1e-8 && obs < 1e-8, fmt("controllability=%.2e observability=%.2e", ctrl, obs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"scalar Riccati oracle", scalar_riccati},
      {"Brownian kernel", brownian_kernel},
      {"diagonal identities", diagonal_identities},
      {"three-route kernel agreement", route_agreement},
      {"BVP oracle", bvp_oracle},
      {"Riccati duality", riccati_duality},
      {"reproducing property", reproducing},
      {"primal optimality and dual stationarity", optimality},
      {"smoother route equivalence", route_equivalence},
      {"Monte Carlo covariance", [] { run_monte_carlo_once(); return covariance(); }},
      {"innovation whiteness", whiteness},
      {"Gramian identities", gramians},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures ? 1 : 0;
}
