#include "pipestab/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "pipestab/errors.hpp"
#include "pipestab/matrix_io.hpp"

namespace pipestab {

namespace {

// One term y_j * coeff of an affine matrix function.
struct Term {
  int var;
  Eigen::MatrixXd coeff;
};

// constant + sum_j y_j A_j >= 0
struct Block {
  Eigen::MatrixXd constant;
  std::vector<Term> terms;

  Eigen::MatrixXd at(const Eigen::VectorXd& y) const {
    Eigen::MatrixXd out = constant;
    for (const Term& t : terms) out.noalias() += y(t.var) * t.coeff;
    return out;
  }
};

// Maximize y(t_index) subject to every block being positive definite and
// eq' y = 1. Variables: upper triangles of P, R, S followed by t.
struct MarginProgram {
  int num_vars = 0;
  int t_index = 0;
  int total_dim = 0;
  std::vector<Block> blocks;
  Eigen::VectorXd eq;
};

// Index map of the upper triangle of a k x k symmetric matrix.
struct SymLayout {
  int offset;
  int dim;
  int count() const { return dim * (dim + 1) / 2; }
};

Eigen::MatrixXd sym_basis(int dim, int i, int j) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

template <typename Fn>
void for_each_entry(const SymLayout& lay, Fn&& fn) {
  int v = lay.offset;
  for (int i = 0; i < lay.dim; ++i) {
    for (int j = i; j < lay.dim; ++j) fn(v++, i, j);
  }
}

Eigen::MatrixXd unpack(const Eigen::VectorXd& y, const SymLayout& lay) {
  Eigen::MatrixXd out(lay.dim, lay.dim);
  for_each_entry(lay, [&](int v, int i, int j) {
    out(i, j) = y(v);
    out(j, i) = y(v);
  });
  return out;
}

struct Layouts {
  SymLayout P, R, S;
};

MarginProgram build_program(const LmiProblem& pb, double alpha,
                            const Layouts& lay) {
  const int k = pb.state_dim();
  MarginProgram prog;
  prog.num_vars = lay.S.offset + lay.S.count() + 1;
  prog.t_index = prog.num_vars - 1;
  prog.eq = Eigen::VectorXd::Zero(prog.num_vars);

  auto self_block = [&](const SymLayout& sl) {
    Block b;
    b.constant = Eigen::MatrixXd::Zero(sl.dim, sl.dim);
    for_each_entry(sl, [&](int v, int i, int j) {
      b.terms.push_back({v, sym_basis(sl.dim, i, j)});
      if (i == j) prog.eq(v) = 1.0;
    });
    b.terms.push_back({prog.t_index, -Eigen::MatrixXd::Identity(sl.dim, sl.dim)});
    return b;
  };
  prog.blocks.push_back(self_block(lay.P));
  prog.blocks.push_back(self_block(lay.R));
  prog.blocks.push_back(self_block(lay.S));

  // -(Psi - c R_N) is linear in (P, R, S); one coefficient per basis entry.
  Block lmi;
  lmi.constant = Eigen::MatrixXd::Zero(pb.dim_xi, pb.dim_xi);
  const Eigen::Matrix2d Z2 = Eigen::Matrix2d::Zero();
  for_each_entry(lay.P, [&](int v, int i, int j) {
    DecisionVars e(sym_basis(k, i, j), Z2, Z2);
    lmi.terms.push_back({v, -lmi_matrix(pb, e, alpha)});
  });
  for_each_entry(lay.R, [&](int v, int i, int j) {
    DecisionVars e(Eigen::MatrixXd::Zero(k, k), sym_basis(2, i, j), Z2);
    lmi.terms.push_back({v, -lmi_matrix(pb, e, alpha)});
  });
  for_each_entry(lay.S, [&](int v, int i, int j) {
    DecisionVars e(Eigen::MatrixXd::Zero(k, k), Z2, sym_basis(2, i, j));
    lmi.terms.push_back({v, -lmi_matrix(pb, e, alpha)});
  });
  lmi.terms.push_back(
      {prog.t_index, -Eigen::MatrixXd::Identity(pb.dim_xi, pb.dim_xi)});
  prog.blocks.push_back(std::move(lmi));

  for (const Block& b : prog.blocks) prog.total_dim += static_cast<int>(b.constant.rows());
  return prog;
}

// Cholesky factors of every block; false if any block is not positive
// definite.
bool factor_blocks(const MarginProgram& prog, const Eigen::VectorXd& y,
                   std::vector<Eigen::LLT<Eigen::MatrixXd>>& factors,
                   double& logdet) {
  factors.resize(prog.blocks.size());
  logdet = 0.0;
  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    factors[b].compute(prog.blocks[b].at(y));
    if (factors[b].info() != Eigen::Success) return false;
    const auto diag = factors[b].matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0)) return false;
      logdet += 2.0 * std::log(diag(i));
    }
  }
  return std::isfinite(logdet);
}

// Smallest common margin of the actual blocks: min_b lmin(B_b(y)) + t.
double block_margin(const MarginProgram& prog, const Eigen::VectorXd& y) {
  double out = std::numeric_limits<double>::infinity();
  for (const Block& b : prog.blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.at(y),
                                                      Eigen::EigenvaluesOnly);
    out = std::min(out, es.eigenvalues()(0));
  }
  return out + y(prog.t_index);
}

Certificate make_certificate(const LmiProblem& pb, const Layouts& lay,
                             const Eigen::VectorXd& y, double alpha) {
  DecisionVars vars(unpack(y, lay.P), unpack(y, lay.R), unpack(y, lay.S));
  vars = vars * (1.0 / vars.trace_sum());
  Certificate cert;
  cert.vars = vars;
  cert.alpha = alpha;
  cert.margin = certificate_margins(pb, vars, alpha).margin();
  return cert;
}

}  // namespace

const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::feasible:
      return "feasible";
    case FeasibilityStatus::infeasible_at_tolerance:
      return "infeasible-at-tolerance";
    case FeasibilityStatus::numerical_failure:
      return "numerical-failure";
  }
  return "unknown";
}

FeasibilityReport solve_feasibility(const LmiProblem& pb, double alpha,
                                    const FeasibilityOptions& opts) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError("decay rate must be finite and nonnegative");
  }
  const int k = pb.state_dim();
  Layouts lay;
  lay.P = {0, k};
  lay.R = {lay.P.offset + lay.P.count(), 2};
  lay.S = {lay.R.offset + lay.R.count(), 2};
  const MarginProgram prog = build_program(pb, alpha, lay);

  // Start from scaled identities; t sits strictly below every eigenvalue.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(prog.num_vars);
  const double diag0 = 1.0 / (k + 4);
  for (const SymLayout& sl : {lay.P, lay.R, lay.S}) {
    for_each_entry(sl, [&](int v, int i, int j) {
      if (i == j) y(v) = diag0;
    });
  }
  const double m0 = block_margin(prog, y);
  y(prog.t_index) = m0 - 0.1 * std::abs(m0) - diag0;

  FeasibilityReport report;
  double tau = prog.total_dim / std::max(1.0, std::abs(y(prog.t_index)));
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
  const int q = prog.num_vars;
  Eigen::VectorXd grad(q);
  Eigen::MatrixXd hess(q, q);
  std::vector<Eigen::MatrixXd> scaled;

  auto barrier = [&](const Eigen::VectorXd& z, double& value) {
    double logdet = 0.0;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> f;
    if (!factor_blocks(prog, z, f, logdet)) return false;
    value = -tau * z(prog.t_index) - logdet;
    return true;
  };

  auto finish_feasible = [&](const char* how) {
    report.status = FeasibilityStatus::feasible;
    report.certificate = make_certificate(pb, lay, y, alpha);
    report.margin_lower = y(prog.t_index);
    report.normalization_residual = std::abs(prog.eq.dot(y) - 1.0);
    report.diagnostics = how;
    // The solver-side check and the recomputed margin can disagree only
    // through rounding; never report a certificate that fails the threshold.
    if (!(report.certificate->margin > opts.margin_tol)) {
      report.status = FeasibilityStatus::infeasible_at_tolerance;
      report.diagnostics = "recomputed margin below tolerance";
    }
    return report;
  };

  while (true) {
    // Centering at the current barrier weight.
    while (true) {
      double logdet = 0.0;
      if (!factor_blocks(prog, y, factors, logdet)) {
        report.diagnostics = "iterate left the interior";
        return report;
      }
      grad.setZero();
      grad(prog.t_index) = -tau;
      hess.setZero();
      for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
        const Block& blk = prog.blocks[b];
        const auto& L = factors[b].matrixL();
        scaled.resize(blk.terms.size());
        for (std::size_t a = 0; a < blk.terms.size(); ++a) {
          // L^{-1} A L^{-T}
          Eigen::MatrixXd tmp = L.solve(blk.terms[a].coeff);
          scaled[a] = L.solve(tmp.transpose());
          grad(blk.terms[a].var) -= scaled[a].trace();
        }
        for (std::size_t a = 0; a < blk.terms.size(); ++a) {
          for (std::size_t c = a; c < blk.terms.size(); ++c) {
            const double v = scaled[a].cwiseProduct(scaled[c]).sum();
            hess(blk.terms[a].var, blk.terms[c].var) += v;
            if (c != a) hess(blk.terms[c].var, blk.terms[a].var) += v;
          }
        }
      }
      // Equality-constrained Newton step on the Jacobi-scaled Hessian.
      const Eigen::VectorXd dscale = hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd hs = dscale.asDiagonal() * hess * dscale.asDiagonal();
      Eigen::LLT<Eigen::MatrixXd> llt(hs);
      if (llt.info() != Eigen::Success) {
        report.diagnostics = "singular Newton system";
        return report;
      }
      const Eigen::VectorXd hg =
          dscale.asDiagonal() * llt.solve(dscale.asDiagonal() * grad);
      const Eigen::VectorXd ha =
          dscale.asDiagonal() * llt.solve(dscale.asDiagonal() * prog.eq);
      const double nu = -prog.eq.dot(hg) / prog.eq.dot(ha);
      const Eigen::VectorXd dy = -(hg + nu * ha);
      const double decrement = -grad.dot(dy);
      if (!std::isfinite(decrement)) {
        report.diagnostics = "non-finite Newton decrement";
        return report;
      }
      if (decrement / 2.0 <= opts.centering_tol) break;

      double f0 = 0.0;
      barrier(y, f0);
      double step = 1.0;
      double f1 = 0.0;
      bool accepted = false;
      while (step > 1e-14) {
        const Eigen::VectorXd trial = y + step * dy;
        if (barrier(trial, f1) && f1 <= f0 + 0.25 * step * grad.dot(dy)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // stalled; treat as centered
      y += step * dy;
      // Re-impose the normalization exactly against drift.
      y.head(prog.t_index) /= prog.eq.dot(y);

      if (++report.iterations > opts.max_newton_steps) {
        report.diagnostics = "Newton iteration cap reached";
        report.margin_lower = y(prog.t_index);
        report.margin_upper = std::numeric_limits<double>::infinity();
        return report;
      }
      if (block_margin(prog, y) > opts.margin_tol) {
        return finish_feasible("margin above tolerance");
      }
    }

    const double gap = prog.total_dim / tau;
    report.margin_lower = y(prog.t_index);
    report.margin_upper = y(prog.t_index) + gap;
    if (block_margin(prog, y) > opts.margin_tol) {
      return finish_feasible("margin above tolerance");
    }
    if (report.margin_upper <= opts.margin_tol) {
      report.status = FeasibilityStatus::infeasible_at_tolerance;
      report.normalization_residual = std::abs(prog.eq.dot(y) - 1.0);
      report.diagnostics = "margin upper bound below tolerance";
      return report;
    }
    if (gap < 1e-3 * opts.margin_tol) {
      // The optimum sits on the threshold to within the duality gap.
      report.status = FeasibilityStatus::infeasible_at_tolerance;
      report.normalization_residual = std::abs(prog.eq.dot(y) - 1.0);
      report.diagnostics = "optimal margin indistinguishable from tolerance";
      return report;
    }
    tau *= opts.barrier_growth;
  }
}

double CertificateMargins::margin() const {
  return std::min({min_eig_P, min_eig_R, min_eig_S, -max_eig_lmi});
}

CertificateMargins certificate_margins(const LmiProblem& pb,
                                       const DecisionVars& vars, double alpha) {
  if (vars.P().rows() != pb.state_dim()) {
    throw InputError("certificate P does not match the problem dimension");
  }
  auto eigs = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  };
  CertificateMargins out;
  out.min_eig_P = eigs(vars.P()).minCoeff();
  out.min_eig_R = eigs(vars.R()).minCoeff();
  out.min_eig_S = eigs(vars.S()).minCoeff();
  out.max_eig_lmi = eigs(lmi_matrix(pb, vars, alpha)).maxCoeff();
  return out;
}

bool verify_certificate(const LmiProblem& pb, const Certificate& cert,
                        double tol) {
  const CertificateMargins m = certificate_margins(pb, cert.vars, cert.alpha);
  return m.min_eig_P >= tol && m.min_eig_R >= tol && m.min_eig_S >= tol &&
         m.max_eig_lmi <= -tol;
}

void write_certificate(std::ostream& os, const LmiProblem& pb,
                       const Certificate& cert) {
  dump_structural(os, pb);
  write_matrix(os, "alpha", Eigen::MatrixXd::Constant(1, 1, cert.alpha));
  write_matrix(os, "margin", Eigen::MatrixXd::Constant(1, 1, cert.margin));
  write_matrix(os, "P", cert.vars.P());
  write_matrix(os, "R", cert.vars.R());
  write_matrix(os, "S", cert.vars.S());
}

Certificate read_certificate(std::istream& is) {
  const auto mats = read_matrices(is);
  auto get = [&](const char* name) -> const Eigen::MatrixXd& {
    auto it = mats.find(name);
    if (it == mats.end()) {
      throw InputError(std::string("certificate is missing matrix '") + name + "'");
    }
    return it->second;
  };
  const Eigen::MatrixXd& R = get("R");
  const Eigen::MatrixXd& S = get("S");
  if (R.rows() != 2 || R.cols() != 2 || S.rows() != 2 || S.cols() != 2) {
    throw InputError("certificate R and S must be 2x2");
  }
  Certificate cert;
  cert.vars = DecisionVars(get("P"), R, S);
  cert.alpha = get("alpha")(0, 0);
  cert.margin = get("margin")(0, 0);
  return cert;
}

}  // namespace pipestab
