#include "pipestab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "pipestab/errors.hpp"

namespace pipestab {

namespace {

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows,
                  Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << "controller matrix " << name << " is " << m.rows() << "x"
       << m.cols() << ", expected " << rows << "x" << cols;
    throw ParameterError(os.str());
  }
}

}  // namespace

Eigen::Matrix2d PlantParams::A() const {
  Eigen::Matrix2d a;
  a << 0.0, 1.0, A21, A22;
  return a;
}

void PlantParams::validate() const {
  for (double v : {c, k, g, q, Te, Omega_e, A21, A22, b, e1, e2}) {
    if (!std::isfinite(v)) throw ParameterError("plant parameter is not finite");
  }
  if (!(c > 0.0)) throw ParameterError("wave speed c must be positive");
  if (!(Omega_e > 0.0)) throw ParameterError("Omega_e must be positive");
}

ControllerParams ControllerParams::feedforward() {
  ControllerParams ctrl;
  ctrl.n = 0;
  ctrl.Ac = Eigen::MatrixXd::Zero(0, 0);
  ctrl.Bc1 = Eigen::MatrixXd::Zero(0, 2);
  ctrl.Bc2 = Eigen::MatrixXd::Zero(0, 2);
  ctrl.C1 = Eigen::RowVectorXd::Zero(2);
  ctrl.C2 = Eigen::RowVectorXd::Zero(0);
  ctrl.K.setZero();
  return ctrl;
}

ControllerParams ControllerParams::dynamic_reference() {
  ControllerParams ctrl;
  ctrl.n = 2;
  ctrl.Ac.resize(2, 2);
  ctrl.Ac << -800.0, 0.0, 0.0, -150.0;
  ctrl.Bc1 = Eigen::MatrixXd::Zero(2, 2);
  ctrl.Bc2 = Eigen::MatrixXd::Identity(2, 2);
  ctrl.C1.resize(4);
  ctrl.C1 << 800.0, 0.015, 0.01, -0.1;
  ctrl.C2.resize(2);
  ctrl.C2 << 0.0, -0.0718;
  ctrl.K << -82.2, 10.4;
  return ctrl;
}

void ControllerParams::validate() const {
  if (n < 0) throw ParameterError("controller order must be nonnegative");
  expect_shape(Ac, n, n, "Ac");
  expect_shape(Bc1, n, 2, "Bc1");
  expect_shape(Bc2, n, 2, "Bc2");
  expect_shape(C1, 1, n + 2, "C1");
  expect_shape(C2, 1, n, "C2");
  auto finite = [](const Eigen::MatrixXd& m) { return m.allFinite(); };
  if (!finite(Ac) || !finite(Bc1) || !finite(Bc2) || !finite(C1) ||
      !finite(C2) || !K.allFinite()) {
    throw ParameterError("controller matrix has non-finite entries");
  }
}

ClosedLoop build_closed_loop(const PlantParams& plant,
                             const ControllerParams& ctrl) {
  plant.validate();
  ctrl.validate();
  const int n = ctrl.n;
  const int m = n + 2;
  const double c = plant.c;

  ClosedLoop cl;
  cl.m = m;
  cl.Atil = Eigen::MatrixXd::Zero(m, m);
  cl.Atil.topLeftCorner(n, n) = ctrl.Ac;
  cl.Atil.topRightCorner(n, 2) = ctrl.Bc1;
  cl.Atil.bottomLeftCorner(2, n) = plant.B() * ctrl.C2;
  cl.Atil.bottomRightCorner(2, 2) = plant.A() + plant.B() * ctrl.K;

  // Tail ordering is [w_t(1); w_t(0)], Bc2 is written against
  // [w_t(0); w_t(1)], hence the column swap.
  cl.Bhat = Eigen::MatrixXd::Zero(m, 2);
  if (n > 0) {
    cl.Bhat.col(0).head(n) = ctrl.Bc2.col(1);
    cl.Bhat.col(1).head(n) = ctrl.Bc2.col(0);
  }
  cl.Bhat.col(0).tail(2) = plant.E1();

  cl.G << 0.0, 1.0 + c * plant.g, 1.0 + c * plant.k, 0.0;
  cl.H << 1.0 - c * plant.k, 0.0, 0.0, 1.0 - c * plant.g;
  cl.C1 = ctrl.C1;
  cl.state_scale = Eigen::VectorXd::Ones(m);
  return cl;
}

ClosedLoop rescale_states(const ClosedLoop& cl, const Eigen::VectorXd& d) {
  if (d.size() != cl.m || !(d.array() > 0.0).all()) {
    throw ParameterError("state scaling must be positive with one entry per state");
  }
  ClosedLoop out = cl;
  out.Atil = d.cwiseInverse().asDiagonal() * cl.Atil * d.asDiagonal();
  out.Bhat = d.cwiseInverse().asDiagonal() * cl.Bhat;
  out.C1 = cl.C1 * d.asDiagonal();
  out.state_scale = cl.state_scale.cwiseProduct(d);
  return out;
}

ClosedLoop balance_states(const ClosedLoop& cl, const PlantParams& plant) {
  const double cg = std::abs(plant.c * plant.g);
  ClosedLoop cur = cl;
  for (int sweep = 0; sweep < 32; ++sweep) {
    bool changed = false;
    for (int i = 0; i < cl.m; ++i) {
      const double row = cur.Atil.row(i).cwiseAbs().sum() -
                         std::abs(cur.Atil(i, i)) +
                         cur.Bhat.row(i).cwiseAbs().sum();
      const double col = cur.Atil.col(i).cwiseAbs().sum() -
                         std::abs(cur.Atil(i, i)) + cg * std::abs(cur.C1(i));
      if (row == 0.0 || col == 0.0) continue;
      // Nearest power of two to sqrt(row / col).
      const int e = static_cast<int>(std::lround(0.5 * std::log2(row / col)));
      if (e == 0) continue;
      Eigen::VectorXd step = Eigen::VectorXd::Ones(cl.m);
      step(i) = std::ldexp(1.0, e);
      cur = rescale_states(cur, step);
      changed = true;
    }
    if (!changed) break;
  }
  return cur;
}

FeedforwardControls feedforward_controls(const PlantParams& plant) {
  if (plant.g == 0.0) throw ParameterError("feedforward needs g != 0");
  if (plant.b == 0.0) throw ParameterError("feedforward needs b != 0");
  FeedforwardControls ff;
  ff.u1e = plant.Omega_e * (1.0 + plant.k / plant.g) +
           (plant.q / plant.g) * plant.Te;
  ff.u2e = (plant.Te * plant.e2 - plant.Omega_e * plant.e1) / plant.b;
  return ff;
}

double equilibrium_slope(const PlantParams& plant) {
  return -plant.k * plant.Omega_e - plant.q * plant.Te;
}

double AlphaMax::value() const {
  if (infinite_) throw DomainError("alpha_max is infinite");
  return value_;
}

double AlphaMax::capped(double cap) const {
  return infinite_ ? cap : std::min(value_, cap);
}

AlphaMax alpha_max(const PlantParams& plant) {
  const double ck = plant.c * plant.k;
  const double cg = plant.c * plant.g;
  // k = 1/c entered as a decimal rarely gives ck == 1 exactly.
  const double eps = 8.0 * std::numeric_limits<double>::epsilon();
  if (std::abs(ck - 1.0) <= eps || std::abs(cg - 1.0) <= eps) return AlphaMax::infinite();
  const double den = (ck - 1.0) * (cg - 1.0);
  const double ratio = std::abs((ck + 1.0) * (cg + 1.0) / den);
  if (ratio == 0.0) return AlphaMax::finite(0.0);
  return AlphaMax::finite(std::max(0.5 * plant.c * std::log(ratio), 0.0));
}

double spectral_abscissa(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace pipestab
