#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pipestab/legendre.hpp"
#include "pipestab/model.hpp"

namespace pipestab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Max-norm residual of d/dt X_N = c (ones chi(1) - bar_ones chi(0)) - c L X_N
// for a smooth profile transported by chi_t = c chi_x, using a centered
// difference of step dt in time and M grid intervals in space.
double projection_derivative_residual(double c, int N, int M, double dt);

// Bessel gaps for random fields and weights. Passes when every gap is at
// least -1e-9, non-increasing in N, and |gap| <= 1e-9 on fields inside
// the span of L_0..L_N.
CheckResult check_bessel(std::uint64_t seed, int cases);
// Residual drops by at least 2.5x per halving of dx and dt.
CheckResult check_projection_derivative(double c);
// Fixed-end error drops by at least 3.5x per mesh halving at CFL 0.9.
CheckResult check_scheme_order(double c);
// Feasible verdicts pass verification at margin / 2; flipping the sign of S
// makes verification fail.
CheckResult check_certificates(const PlantParams& plant,
                               const ControllerParams& ctrl, int max_order);

std::vector<CheckResult> run_validation(const PlantParams& plant,
                                        const ControllerParams& ctrl,
                                        std::uint64_t seed);

}  // namespace pipestab
