#include "pipestab/lmi.hpp"

#include <cmath>
#include <ostream>

#include "pipestab/errors.hpp"
#include "pipestab/legendre.hpp"
#include "pipestab/matrix_io.hpp"

namespace pipestab {

DecisionVars::DecisionVars(Eigen::MatrixXd P, Eigen::Matrix2d R,
                           Eigen::Matrix2d S) {
  if (P.rows() != P.cols()) throw InputError("P must be square");
  P_ = 0.5 * (P + P.transpose());
  R_ = 0.5 * (R + R.transpose());
  S_ = 0.5 * (S + S.transpose());
}

DecisionVars DecisionVars::zero(int state_dim) {
  return DecisionVars(Eigen::MatrixXd::Zero(state_dim, state_dim),
                      Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero());
}

DecisionVars DecisionVars::operator+(const DecisionVars& other) const {
  if (P_.rows() != other.P_.rows()) throw InputError("P size mismatch");
  return DecisionVars(P_ + other.P_, R_ + other.R_, S_ + other.S_);
}

DecisionVars DecisionVars::operator*(double s) const {
  return DecisionVars(s * P_, s * R_, s * S_);
}

LmiProblem assemble(int N, const ClosedLoop& cl, const PlantParams& plant) {
  if (N < 0) throw DomainError("projection order must be nonnegative");
  const StructuralMatrices s = build_structural(N);
  const double c = plant.c;
  const double cg = c * plant.g;

  LmiProblem pb;
  pb.N = N;
  pb.m = cl.m;
  pb.p = 2 * (N + 1);
  pb.dim_xi = pb.m + pb.p + 2;
  pb.c = c;
  pb.L = s.L;
  pb.ones = s.ones;
  pb.bar_ones = s.bar_ones;
  pb.state_scale = cl.state_scale.size() == cl.m
                       ? cl.state_scale
                       : Eigen::VectorXd::Ones(cl.m);

  const int m = pb.m;
  const int p = pb.p;
  const int t = pb.tail_offset();
  const int d = pb.dim_xi;

  pb.F = Eigen::MatrixXd::Zero(m + p, d);
  pb.F.leftCols(m + p).setIdentity();

  pb.Gn = Eigen::MatrixXd::Zero(2, d);
  pb.Gn.block(0, 0, 1, m) = -cg * cl.C1;
  pb.Gn.block<2, 2>(0, t) = cl.G;

  pb.Hn = Eigen::MatrixXd::Zero(2, d);
  pb.Hn.block(1, 0, 1, m) = cg * cl.C1;
  pb.Hn.block<2, 2>(0, t) = cl.H;

  pb.Zn = Eigen::MatrixXd::Zero(m + p, d);
  pb.Zn.block(0, 0, m, m) = cl.Atil;
  pb.Zn.block(0, t, m, 2) = cl.Bhat;
  pb.Zn.bottomRows(p) = c * s.ones * pb.Hn - c * s.bar_ones * pb.Gn;
  pb.Zn.block(m, m, p, p) -= c * s.L;
  return pb;
}

Eigen::MatrixXd psi(const LmiProblem& pb, const DecisionVars& vars,
                    double alpha) {
  if (vars.P().rows() != pb.state_dim()) {
    throw InputError("P does not match the LMI state dimension");
  }
  const Eigen::MatrixXd PF = vars.P() * pb.F;
  const Eigen::MatrixXd cross = (pb.Zn + alpha * pb.F).transpose() * PF;
  const double growth = std::exp(2.0 * alpha / pb.c);
  Eigen::MatrixXd out = cross + cross.transpose();
  out -= pb.c * pb.Gn.transpose() * vars.S() * pb.Gn;
  out += (pb.c * growth) * pb.Hn.transpose() * (vars.S() + vars.R()) * pb.Hn;
  return out;
}

Eigen::MatrixXd weighted_r_block(const LmiProblem& pb,
                                 const Eigen::Matrix2d& R) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(pb.dim_xi, pb.dim_xi);
  for (int ell = 0; ell <= pb.N; ++ell) {
    out.block<2, 2>(pb.m + 2 * ell, pb.m + 2 * ell) = (2.0 * ell + 1.0) * R;
  }
  return out;
}

Eigen::MatrixXd lmi_matrix(const LmiProblem& pb, const DecisionVars& vars,
                           double alpha) {
  return psi(pb, vars, alpha) - pb.c * weighted_r_block(pb, vars.R());
}

void dump_structural(std::ostream& os, const LmiProblem& pb) {
  os << "# order N=" << pb.N << " m=" << pb.m << " p=" << pb.p
     << " dim_xi=" << pb.dim_xi << " c=" << format_number(pb.c) << "\n";
  write_matrix(os, "F", pb.F);
  write_matrix(os, "Z", pb.Zn);
  write_matrix(os, "G", pb.Gn);
  write_matrix(os, "H", pb.Hn);
  write_matrix(os, "L", pb.L);
  write_matrix(os, "ones", pb.ones);
  write_matrix(os, "bar_ones", pb.bar_ones);
}

}  // namespace pipestab
