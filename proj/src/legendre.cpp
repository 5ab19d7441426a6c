#include "pipestab/legendre.hpp"

#include <cmath>
#include <sstream>

#include "pipestab/errors.hpp"

namespace pipestab {

namespace {

double binomial(int n, int r) {
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

const LegendreBasis& default_basis() {
  static const LegendreBasis basis(kMaxLegendreDegree);
  return basis;
}

}  // namespace

LegendreBasis::LegendreBasis(int max_degree) : max_degree_(max_degree) {
  if (max_degree < 0 || max_degree > kMaxLegendreDegree) {
    throw DomainError("Legendre degree must lie in [0, 10]");
  }
  coeffs_ = Eigen::MatrixXd::Zero(max_degree + 1, max_degree + 1);
  for (int ell = 0; ell <= max_degree; ++ell) {
    const double outer = (ell % 2 == 0) ? 1.0 : -1.0;
    for (int l = 0; l <= ell; ++l) {
      const double sign = (l % 2 == 0) ? 1.0 : -1.0;
      coeffs_(ell, l) = outer * sign * binomial(ell, l) * binomial(ell + l, l);
    }
  }
}

double LegendreBasis::eval(int ell, double x) const {
  if (ell < 0 || ell > max_degree_) {
    throw DomainError("Legendre degree out of range");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream os;
    os << "Legendre argument " << x << " outside [0, 1]";
    throw DomainError(os.str());
  }
  double acc = 0.0;
  for (int l = ell; l >= 0; --l) acc = acc * x + coeffs_(ell, l);
  return acc;
}

double eval_legendre(int ell, double x) { return default_basis().eval(ell, x); }

double coeff_l(int k, int j) {
  if (j > k) return 0.0;
  const double parity = ((j + k) % 2 == 0) ? 1.0 : -1.0;
  return (2.0 * j + 1.0) * (1.0 - parity);
}

StructuralMatrices build_structural(int N) {
  if (N < 0) throw DomainError("projection order must be nonnegative");
  const int p = 2 * (N + 1);
  StructuralMatrices s;
  s.L = Eigen::MatrixXd::Zero(p, p);
  s.ones = Eigen::MatrixXd::Zero(p, 2);
  s.bar_ones = Eigen::MatrixXd::Zero(p, 2);
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  for (int k = 0; k <= N; ++k) {
    for (int j = 0; j <= k; ++j) {
      s.L.block<2, 2>(2 * k, 2 * j) = coeff_l(k, j) * I;
    }
    s.ones.block<2, 2>(2 * k, 0) = I;
    s.bar_ones.block<2, 2>(2 * k, 0) = (k % 2 == 0 ? 1.0 : -1.0) * I;
  }
  return s;
}

Eigen::VectorXd quadrature_weights(Eigen::Index n) {
  if (n < 2) throw InputError("quadrature needs at least 2 samples");
  const Eigen::Index intervals = n - 1;
  const double h = 1.0 / static_cast<double>(intervals);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (n == 2) {
    w << 0.5, 0.5;
    return w;
  }
  Eigen::Index simpson_end = intervals;  // last node covered by 1/3 panels
  if (intervals % 2 == 1) simpson_end = intervals - 3;
  for (Eigen::Index i = 0; i + 2 <= simpson_end; i += 2) {
    w(i) += h / 3.0;
    w(i + 1) += 4.0 * h / 3.0;
    w(i + 2) += h / 3.0;
  }
  if (intervals % 2 == 1) {
    const Eigen::Index s = simpson_end;
    w(s) += 3.0 * h / 8.0;
    w(s + 1) += 9.0 * h / 8.0;
    w(s + 2) += 9.0 * h / 8.0;
    w(s + 3) += 3.0 * h / 8.0;
  }
  return w;
}

Eigen::Vector2d project(const Field2& chi, int ell) {
  const Eigen::Index n = chi.cols();
  const Eigen::VectorXd w = quadrature_weights(n);
  const LegendreBasis& basis = default_basis();
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    acc += w(i) * basis.eval(ell, x) * chi.col(i);
  }
  return acc;
}

Eigen::VectorXd projection_stack(const Field2& chi, int N) {
  if (N < 0) throw DomainError("projection order must be nonnegative");
  Eigen::VectorXd stack(2 * (N + 1));
  for (int ell = 0; ell <= N; ++ell) stack.segment<2>(2 * ell) = project(chi, ell);
  return stack;
}

double bessel_gap(const Field2& chi, const Eigen::Matrix2d& R, int N) {
  if ((R - R.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff())) {
    throw InputError("Bessel weight R must be symmetric");
  }
  Eigen::LLT<Eigen::Matrix2d> llt(R);
  if (llt.info() != Eigen::Success) {
    throw InputError("Bessel weight R must be positive definite");
  }
  const Eigen::VectorXd w = quadrature_weights(chi.cols());
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < chi.cols(); ++i) {
    lhs += w(i) * chi.col(i).dot(R * chi.col(i));
  }
  double rhs = 0.0;
  for (int ell = 0; ell <= N; ++ell) {
    const Eigen::Vector2d X = project(chi, ell);
    rhs += (2.0 * ell + 1.0) * X.dot(R * X);
  }
  return lhs - rhs;
}

}  // namespace pipestab
