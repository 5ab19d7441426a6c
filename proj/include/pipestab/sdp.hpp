#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pipestab/lmi.hpp"

namespace pipestab {

struct Certificate {
  DecisionVars vars;
  double alpha = 0.0;
  // min(lmin(P), lmin(R), lmin(S), -lmax(Psi - c R_N)) after normalizing
  // trace(P) + trace(R) + trace(S) = 1.
  double margin = 0.0;
};

enum class FeasibilityStatus { feasible, infeasible_at_tolerance, numerical_failure };

const char* to_string(FeasibilityStatus s);

struct FeasibilityOptions {
  // Declared feasible iff the optimal common margin exceeds this.
  double margin_tol = 1e-7;
  int max_newton_steps = 3000;
  double barrier_growth = 10.0;
  // Centering stops when the squared Newton decrement falls below this.
  double centering_tol = 1e-10;
};

struct FeasibilityReport {
  FeasibilityStatus status = FeasibilityStatus::numerical_failure;
  std::optional<Certificate> certificate;
  int iterations = 0;
  // Bracket on the optimal margin t* when the solver stopped.
  double margin_lower = 0.0;
  double margin_upper = 0.0;
  // |trace(P) + trace(R) + trace(S) - 1| at the returned point.
  double normalization_residual = 0.0;
  std::string diagnostics;
};

// Maximizes t subject to P >= tI, R >= tI, S >= tI, -(Psi - c R_N) >= tI and
// trace(P) + trace(R) + trace(S) = 1 with a log-barrier path-following
// method. Stops early as soon as either side of the margin_tol threshold is
// settled.
FeasibilityReport solve_feasibility(const LmiProblem& problem, double alpha,
                                    const FeasibilityOptions& opts = {});

struct CertificateMargins {
  double min_eig_P;
  double min_eig_R;
  double min_eig_S;
  double max_eig_lmi;

  double margin() const;
};

// Recomputes the four matrices from the raw decision variables and
// eigendecomposes them.
CertificateMargins certificate_margins(const LmiProblem& problem,
                                       const DecisionVars& vars, double alpha);

// True iff every eigenvalue margin is at least tol. Throws InputError on a
// dimension mismatch.
bool verify_certificate(const LmiProblem& problem, const Certificate& cert,
                        double tol);

// Structural matrices, alpha and the decision variables in the plain-text
// matrix format.
void write_certificate(std::ostream& os, const LmiProblem& problem,
                       const Certificate& cert);
Certificate read_certificate(std::istream& is);

}  // namespace pipestab
