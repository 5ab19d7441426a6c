#pragma once

#include <Eigen/Dense>

namespace pipestab {

// Linearized drilling plant: torsional wave on x in [0, 1] coupled to the
// axial bit dynamics Y' = A Y + B u2 + w_t(1) E1 - Te E2.
struct PlantParams {
  double c = 2.6892;       // wave speed
  double k = 0.1106;       // bit damping
  double g = 2.48;         // rotary table damping
  double q = 0.0012;       // torque gain
  double Te = 7572.4;      // linearized bit torque
  double Omega_e = 10.0;   // target angular speed
  double A21 = -41.58;
  double A22 = -0.43;
  double b = -0.43;
  double e1 = -8.35;
  double e2 = -0.069;

  // Coefficients of the reference drilling rig.
  static PlantParams reference() { return {}; }

  Eigen::Matrix2d A() const;
  Eigen::Vector2d B() const { return {0.0, b}; }
  Eigen::Vector2d E1() const { return {0.0, e1}; }
  Eigen::Vector2d E2() const { return {0.0, e2}; }

  // Throws ParameterError unless c > 0 and Omega_e > 0 and all values are
  // finite.
  void validate() const;
};

// Strictly proper controller of order n driven by Y and the boundary
// velocity errors [w_t(0); w_t(1)]:
//   Xc' = Ac Xc + Bc1 Y + Bc2 [w_t(0); w_t(1)]
//   u1  = C1 [Xc; Y],   u2 = C2 Xc + K Y
struct ControllerParams {
  int n = 0;
  Eigen::MatrixXd Ac;   // n x n
  Eigen::MatrixXd Bc1;  // n x 2
  Eigen::MatrixXd Bc2;  // n x 2
  Eigen::RowVectorXd C1;  // 1 x (n + 2)
  Eigen::RowVectorXd C2;  // 1 x n
  Eigen::RowVector2d K = Eigen::RowVector2d::Zero();

  // Feedforward only: n = 0, C1 = [0 0], C2 empty, K = [0 0].
  static ControllerParams feedforward();
  // Two low-pass filters on the boundary velocities plus static Y feedback.
  static ControllerParams dynamic_reference();

  // Throws ParameterError on any shape inconsistency.
  void validate() const;
};

struct ClosedLoop {
  int m = 2;               // n + 2
  Eigen::MatrixXd Atil;    // m x m
  Eigen::MatrixXd Bhat;    // m x 2, acts on [w_t(1); w_t(0)]
  Eigen::Matrix2d G;       // chi(0) = G tail + ...
  Eigen::Matrix2d H;       // chi(1) = H tail + ...
  Eigen::RowVectorXd C1;   // 1 x m
  // Physical ODE state X = diag(state_scale) * (state used by Atil, Bhat, C1).
  Eigen::VectorXd state_scale;
};

ClosedLoop build_closed_loop(const PlantParams& plant,
                             const ControllerParams& ctrl);

// Exact change of ODE coordinates X = diag(d) Xs. Decay rates and LMI
// feasibility are unchanged; only the conditioning moves.
ClosedLoop rescale_states(const ClosedLoop& cl, const Eigen::VectorXd& d);

// Osborne-style balancing of the ODE coordinates against their coupling to
// the boundary (Atil, Bhat and cg * C1). Factors are powers of two, so the
// transformation introduces no rounding.
ClosedLoop balance_states(const ClosedLoop& cl, const PlantParams& plant);

struct FeedforwardControls {
  double u1e;
  double u2e;
};

// Constant inputs that make (w_t = Omega_e, Y = 0) an equilibrium.
FeedforwardControls feedforward_controls(const PlantParams& plant);

// Spatially constant equilibrium twist gradient w_x = -k Omega_e - q Te.
double equilibrium_slope(const PlantParams& plant);

// Upper bound on any certifiable decay rate. Infinite when c k = 1 or
// c g = 1 (no neutral part).
class AlphaMax {
 public:
  static AlphaMax finite(double value) { return AlphaMax(value, false); }
  static AlphaMax infinite() { return AlphaMax(0.0, true); }

  bool is_infinite() const { return infinite_; }
  // Throws DomainError for the infinite bound.
  double value() const;
  // min(bound, cap); the cap is returned unchanged for the infinite bound.
  double capped(double cap) const;
  bool admits(double alpha) const { return infinite_ || alpha <= value_; }

 private:
  AlphaMax(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

AlphaMax alpha_max(const PlantParams& plant);

// Largest real part of the eigenvalues of a square matrix.
double spectral_abscissa(const Eigen::MatrixXd& m);

}  // namespace pipestab
