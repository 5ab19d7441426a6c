#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "pipestab/model.hpp"

namespace pipestab {

// Structural data of the decay-rate LMI at projection order N. The extended
// vector is xi = [X; X_0; ...; X_N; w_t(1); w_t(0)] of length m + p + 2, with
// m = n + 2 and p = 2(N + 1). Row blocks:
//   F  xi = [X; X_0..X_N]
//   Z  xi = d/dt [X; X_0..X_N]
//   Gn xi = chi(0),  Hn xi = chi(1)
struct LmiProblem {
  int N = 0;
  int m = 2;
  int p = 2;
  int dim_xi = 6;
  double c = 1.0;
  Eigen::MatrixXd F;   // (m+p) x dim_xi
  Eigen::MatrixXd Zn;  // (m+p) x dim_xi, rows [N_N; Z_N]
  Eigen::MatrixXd Gn;  // 2 x dim_xi
  Eigen::MatrixXd Hn;  // 2 x dim_xi
  Eigen::MatrixXd L;         // p x p
  Eigen::MatrixXd ones;      // p x 2
  Eigen::MatrixXd bar_ones;  // p x 2
  // Physical ODE state = diag(state_scale) * LMI ODE coordinates.
  Eigen::VectorXd state_scale;

  int state_dim() const { return m + p; }
  // Offset of the tail [w_t(1); w_t(0)] within xi.
  int tail_offset() const { return m + p; }
};

// Decision variables of the LMI. Symmetrized on construction.
class DecisionVars {
 public:
  DecisionVars() = default;
  DecisionVars(Eigen::MatrixXd P, Eigen::Matrix2d R, Eigen::Matrix2d S);

  static DecisionVars zero(int state_dim);

  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::Matrix2d& R() const { return R_; }
  const Eigen::Matrix2d& S() const { return S_; }

  double trace_sum() const { return P_.trace() + R_.trace() + S_.trace(); }

  DecisionVars operator+(const DecisionVars& other) const;
  DecisionVars operator*(double s) const;

 private:
  Eigen::MatrixXd P_;
  Eigen::Matrix2d R_ = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d S_ = Eigen::Matrix2d::Zero();
};

LmiProblem assemble(int N, const ClosedLoop& cl, const PlantParams& plant);

// He((Z + alpha F)' P F) - c Gn' S Gn + c Hn' (S + R) Hn e^{2 alpha / c}.
Eigen::MatrixXd psi(const LmiProblem& problem, const DecisionVars& vars,
                    double alpha);

// diag(0_m, R, 3R, ..., (2N+1)R, 0_2).
Eigen::MatrixXd weighted_r_block(const LmiProblem& problem,
                                 const Eigen::Matrix2d& R);

// psi - c R_N; the LMI requires this to be negative definite.
Eigen::MatrixXd lmi_matrix(const LmiProblem& problem, const DecisionVars& vars,
                           double alpha);

// Writes every structural matrix in the plain-text matrix format.
void dump_structural(std::ostream& os, const LmiProblem& problem);

}  // namespace pipestab
