#include "pipestab/validation.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "pipestab/analysis.hpp"
#include "pipestab/sim.hpp"

namespace pipestab {

namespace {

Eigen::Vector2d profile(double s) {
  return {std::sin(2.0 * s) + 0.3 * std::cos(5.0 * s),
          std::exp(-s) * std::cos(3.0 * s)};
}

Field2 transported(double c, double t, int M) {
  Field2 chi(2, M + 1);
  for (int i = 0; i <= M; ++i) chi.col(i) = profile(static_cast<double>(i) / M + c * t);
  return chi;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

double projection_derivative_residual(double c, int N, int M, double dt) {
  const StructuralMatrices s = build_structural(N);
  const Eigen::VectorXd xp = projection_stack(transported(c, dt, M), N);
  const Eigen::VectorXd xm = projection_stack(transported(c, -dt, M), N);
  const Eigen::VectorXd x0 = projection_stack(transported(c, 0.0, M), N);
  const Eigen::VectorXd lhs = (xp - xm) / (2.0 * dt);
  const Eigen::VectorXd rhs =
      c * (s.ones * profile(1.0) - s.bar_ones * profile(0.0)) - c * s.L * x0;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

CheckResult check_bessel(std::uint64_t seed, int cases) {
  CheckResult res{"bessel", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> order(0, 6);
  constexpr int M = 400;
  double worst = 1e300;
  int monotone_breaks = 0;
  for (int trial = 0; trial < cases; ++trial) {
    Eigen::Matrix2d A = Eigen::Matrix2d::NullaryExpr([&] { return u(rng); });
    const Eigen::Matrix2d R = A * A.transpose() + 0.1 * Eigen::Matrix2d::Identity();
    double a[2][4];
    for (auto& row : a) for (double& v : row) v = u(rng);
    Field2 chi(2, M + 1);
    for (int i = 0; i <= M; ++i) {
      const double x = static_cast<double>(i) / M;
      for (int r = 0; r < 2; ++r) {
        chi(r, i) = a[r][0] * std::sin(3.0 * x + a[r][1]) + a[r][2] * std::exp(a[r][3] * x);
      }
    }
    const int Nmax = order(rng);
    double prev = bessel_gap(chi, R, 0);
    worst = std::min(worst, prev);
    for (int N = 1; N <= Nmax; ++N) {
      const double gap = bessel_gap(chi, R, N);
      worst = std::min(worst, gap);
      if (gap > prev + 1e-12) ++monotone_breaks;
      prev = gap;
    }
  }
  // Degree <= N fields are reproduced exactly by their projections; the
  // finer grid keeps Simpson's error on degree 2N integrands below 1e-9.
  constexpr int Ms = 2000;
  double span_err = 0.0;
  for (int N = 0; N <= 4; ++N) {
    Field2 chi(2, Ms + 1);
    for (int i = 0; i <= Ms; ++i) {
      const double x = static_cast<double>(i) / Ms;
      chi(0, i) = std::pow(x, N) - 0.5;
      chi(1, i) = eval_legendre(N, x) + 0.25 * std::pow(x, N);
    }
    span_err = std::max(span_err, std::abs(bessel_gap(chi, Eigen::Matrix2d::Identity(), N)));
  }
  res.passed = worst >= -1e-9 && monotone_breaks == 0 && span_err <= 1e-9;
  std::ostringstream os;
  os << "min gap " << worst << ", monotonicity breaks " << monotone_breaks
     << ", exact-span |gap| " << span_err;
  res.detail = os.str();
  return res;
}

CheckResult check_projection_derivative(double c) {
  CheckResult res{"projection-derivative", true, ""};
  double prev = 0.0;
  double worst_ratio = 1e300;
  for (int level = 0; level < 3; ++level) {
    const int M = 40 << level;
    const double dt = 0.02 / (1 << level);
    const double r = projection_derivative_residual(c, 3, M, dt);
    if (level > 0) worst_ratio = std::min(worst_ratio, prev / r);
    prev = r;
  }
  res.passed = worst_ratio >= 2.5;
  res.detail = fmt("worst reduction per halving %.3g, finest residual %.3g", worst_ratio, prev);
  return res;
}

CheckResult check_scheme_order(double c) {
  CheckResult res{"scheme-order", true, ""};
  double prev = 0.0;
  double worst_ratio = 1e300;
  for (int level = 0; level < 4; ++level) {
    const double e = fixed_end_error(c, 20 << level, 0.9, 1.0);
    if (level > 0) worst_ratio = std::min(worst_ratio, prev / e);
    prev = e;
  }
  res.passed = worst_ratio >= 3.5;
  res.detail = fmt("worst reduction per halving %.3g, finest error %.3g", worst_ratio, prev);
  return res;
}

CheckResult check_certificates(const PlantParams& plant,
                               const ControllerParams& ctrl, int max_order) {
  CheckResult res{"certificates", true, ""};
  int feasible = 0, verified = 0, rejected = 0;
  const AlphaMax bound = alpha_max(plant);
  const double top = bound.capped(2.0);
  for (int N = 0; N <= max_order; ++N) {
    const LmiProblem pb = make_problem(N, plant, ctrl);
    for (int i = 0; i <= 4; ++i) {
      const double alpha = top * i / 4.0;
      const FeasibilityReport r = solve_feasibility(pb, alpha);
      if (r.status != FeasibilityStatus::feasible) continue;
      ++feasible;
      const Certificate& cert = *r.certificate;
      if (verify_certificate(pb, cert, 0.5 * cert.margin)) ++verified;
      Certificate bad = cert;
      bad.vars = DecisionVars(cert.vars.P(), cert.vars.R(), -cert.vars.S());
      if (!verify_certificate(pb, bad, 0.5 * cert.margin)) ++rejected;
    }
  }
  res.passed = verified == feasible && rejected == feasible;
  std::ostringstream os;
  os << feasible << " feasible verdicts, " << verified << " verified, "
     << rejected << " corruptions rejected";
  res.detail = os.str();
  return res;
}

std::vector<CheckResult> run_validation(const PlantParams& plant,
                                        const ControllerParams& ctrl,
                                        std::uint64_t seed) {
  return {check_bessel(seed, 100), check_projection_derivative(plant.c),
          check_scheme_order(plant.c), check_certificates(plant, ctrl, 3)};
}

}  // namespace pipestab
