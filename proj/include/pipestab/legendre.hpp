#pragma once

#include <Eigen/Dense>

namespace pipestab {

// Shifted Legendre polynomials on [0, 1], normalized so that L(1) = 1 and
// int_0^1 L_j L_k dx = delta_jk / (2k + 1).
inline constexpr int kMaxLegendreDegree = 10;

// Monomial coefficients of L_0..L_N; row l holds the coefficients of L_l in
// increasing powers of x.
class LegendreBasis {
 public:
  explicit LegendreBasis(int max_degree);

  int max_degree() const { return max_degree_; }
  const Eigen::MatrixXd& coefficients() const { return coeffs_; }

  // Throws DomainError for x outside [0, 1] or degree out of range.
  double eval(int ell, double x) const;

 private:
  int max_degree_;
  Eigen::MatrixXd coeffs_;
};

double eval_legendre(int ell, double x);

// (2j + 1)(1 - (-1)^(j + k)) for j <= k, zero otherwise.
double coeff_l(int k, int j);

struct StructuralMatrices {
  Eigen::MatrixXd L;         // 2(N+1) x 2(N+1)
  Eigen::MatrixXd ones;      // 2(N+1) x 2, stacked I2
  Eigen::MatrixXd bar_ones;  // 2(N+1) x 2, stacked (-1)^l I2
};

StructuralMatrices build_structural(int N);

// Quadrature weights for n uniformly spaced samples on [0, 1]: composite
// Simpson for odd n, Simpson plus a closing 3/8 panel for even n >= 4,
// trapezoid for n = 2. Throws InputError for n < 2.
Eigen::VectorXd quadrature_weights(Eigen::Index n);

// A 2-vector field sampled on a uniform grid over [0, 1]; column i holds
// chi(i / (n - 1)).
using Field2 = Eigen::Matrix2Xd;

// int_0^1 chi(x) L_ell(x) dx.
Eigen::Vector2d project(const Field2& chi, int ell);

// Projections for ell = 0..N stacked into a 2(N+1) vector.
Eigen::VectorXd projection_stack(const Field2& chi, int N);

// int chi' R chi - sum_l (2l + 1) X_l' R X_l. Nonnegative up to quadrature
// error for every symmetric positive definite R.
double bessel_gap(const Field2& chi, const Eigen::Matrix2d& R, int N);

}  // namespace pipestab
