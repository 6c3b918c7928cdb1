#ifndef SHECOV_GENERATOR_HPP
#define SHECOV_GENERATOR_HPP

#include <Eigen/Dense>

#include "basis.hpp"
#include "noise.hpp"
#include "spectral.hpp"
#include "tensorfield.hpp"

namespace shecov {

/// Truncated tensor-space generator L = A0 + HQ on the orthonormal
/// symmetrized basis {sym(e_i (x) e_j), i <= j}, dimension N = K(K+1)/2.
/// A0 is diagonal with entries -(alpha_i + alpha_j); HQ carries the noise
/// covariance through the triple-product tensor,
///   HQ[(i,j),(m,n)] = sum_k lambda_k^2 T[k][m][i] T[k][n][j]
/// symmetrized over both index pairs. Noise modes share the solution
/// truncation K; the two-point correlation of the truncated SDE evolves as
/// theta(t) = e^{Lt} theta(0) exactly.
class Generator {
public:
  static Generator assemble(const Basis& basis, const QSpec& q);

  int modes() const { return k_; }
  int size() const { return n_; }
  const Eigen::MatrixXd& matrix() const { return l_; }
  const Eigen::MatrixXd& hq() const { return hq_; }
  const Eigen::VectorXd& a0_diagonal() const { return a0_; }

private:
  Generator() = default;
  int k_ = 0;
  int n_ = 0;
  Eigen::VectorXd a0_;
  Eigen::MatrixXd hq_;
  Eigen::MatrixXd l_;
};

/// theta(t) = e^{Lt} theta(0) through the symmetric eigendecomposition.
TensorField evolve_theta(const SpectralDecomposition& dec, const TensorField& theta0,
                         double t);
TensorField evolve_theta(const Generator& gen, const TensorField& theta0, double t);

/// Initial tensor of the data family: coefficients 2(d_mi d_nj + d_mj d_ni).
TensorField theta_ij_initial(int modes, int i, int j);

/// theta^{i,j}(t0) evolved exactly; equals the difference of the two theta
/// evolutions started from e_i + e_j and e_i - e_j by linearity.
TensorField theta_ij_exact(const SpectralDecomposition& dec, int modes, int i, int j,
                           double t0);
TensorField theta_ij_exact(const Generator& gen, int i, int j, double t0);

struct HqNormCheck {
  double operator_norm = 0.0;  // truncated norm of HQ : U^{g1} -> U^{-g2}
  double bound = 0.0;          // Lambda_{(g1+g2)/4,Q} of the declared model
};

/// Largest singular value of HQ between the weighted norms against the
/// analytic Lambda bound; gamma1, gamma2 in [0, d).
HqNormCheck hq_norm_check(const Basis& basis, const QSpec& q, double gamma1,
                          double gamma2);

} // namespace shecov

#endif
