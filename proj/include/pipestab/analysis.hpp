#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pipestab/legendre.hpp"
#include "pipestab/sdp.hpp"

namespace pipestab {

// LMI at order N for the balanced closed loop of (plant, ctrl).
LmiProblem make_problem(int N, const PlantParams& plant,
                        const ControllerParams& ctrl);

struct DecayOptions {
  double tol = 1e-4;
  // Upper end of the bracket when alpha_max is infinite. Defaults to
  // 10 |spectral abscissa of Atil| + 1.
  std::optional<double> cap;
  FeasibilityOptions solver;
};

struct DecayResult {
  int N = 0;
  // False when the LMI is infeasible at alpha = 0: no certificate of
  // asymptotic stability exists at this order.
  bool certified = false;
  double alpha_N = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  AlphaMax bound = AlphaMax::infinite();
  std::optional<Certificate> certificate;
  int solver_calls = 0;
  int newton_steps = 0;
  // Bisection midpoints where the solver gave up; they count as upper ends.
  int numerical_failures = 0;
  // Status of the solve at alpha = 0.
  FeasibilityStatus base_status = FeasibilityStatus::infeasible_at_tolerance;
  std::string note;
};

// Bisection for the largest certified decay rate on [0, min(alpha_max, cap)].
// alpha_N is always the last verified-feasible end of the bracket. Throws
// NumericalFailure when the solver fails at alpha = 0.
DecayResult max_decay_rate(const PlantParams& plant,
                           const ControllerParams& ctrl, int N,
                           const DecayOptions& opts = {});

// alpha <= alpha_max(plant). Cheap filter ahead of any SDP call.
bool necessary_condition(const PlantParams& plant, const ControllerParams& ctrl,
                         double alpha);

struct LabeledController {
  std::string label;
  ControllerParams ctrl;
};

struct HierarchyRow {
  std::string label;
  std::vector<DecayResult> cells;  // N = 0..N_max
  std::optional<std::string> failure;  // first solver failure, if any
  // alpha_{N+1} >= alpha_N - tol for every pair of certified cells.
  bool monotone = true;
};

struct HierarchyTable {
  AlphaMax bound = AlphaMax::infinite();
  int N_max = 0;
  double tol = 0.0;
  std::vector<HierarchyRow> rows;
};

inline constexpr int kMaxTableOrder = 8;

// Every (controller, N) cell is an independent job; threads = 0 picks the
// hardware concurrency. Results do not depend on the thread count.
HierarchyTable hierarchy_table(const PlantParams& plant,
                               const std::vector<LabeledController>& ctrls,
                               int N_max, const DecayOptions& opts = {},
                               unsigned threads = 0);

void write_table_text(std::ostream& os, const HierarchyTable& table);
// controller,N,alpha_N,alpha_max,margin,iterations
void write_table_csv(std::ostream& os, const HierarchyTable& table);

// X' P X + int_0^1 e^{2 alpha x / c} chi' (S + x R) chi dx with
// X = [x_ode; projections of chi up to order N]. x_ode is in physical
// coordinates; the problem's state scaling is undone here.
double lyapunov_value(const LmiProblem& problem, const Certificate& cert,
                      const Eigen::VectorXd& x_ode, const Field2& chi);

}  // namespace pipestab
