#ifndef SHECOV_TENSORFIELD_HPP
#define SHECOV_TENSORFIELD_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "basis.hpp"

namespace shecov {

/// Indexing of the orthonormal symmetrized tensor basis
///   B_(i,i) = e_i (x) e_i,   B_(i,j) = (e_i (x) e_j + e_j (x) e_i)/sqrt(2),
/// pairs (i,j), i <= j, enumerated (1,1), (1,2), (2,2), (1,3), ...
struct SymIndex {
  static int size(int modes) { return modes * (modes + 1) / 2; }
  /// 0-based position of the pair (i, j), 1 <= i <= j.
  static int pos(int i, int j) {
    if (i > j) std::swap(i, j);
    return (j - 1) * j / 2 + (i - 1);
  }
  /// Inverse map, 1-based pair from a 0-based position.
  static std::pair<int, int> pair(int pos) {
    int j = 1;
    while (j * (j + 1) / 2 <= pos) ++j;
    const int i = pos - (j - 1) * j / 2 + 1;
    return {i, j};
  }
};

inline constexpr double kSqrt2 = 1.41421356237309504880168872420969808;

/// Symmetric two-point coefficient field f = sum f_ij e_i (x) e_j on U.
/// The U-norm is the Frobenius norm of the coefficient matrix; the weighted
/// U^gamma norm is (sum alpha_i^g alpha_j^g f_ij^2)^{1/2}.
class TensorField {
public:
  TensorField() = default;
  explicit TensorField(Eigen::MatrixXd coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.rows() != coeffs_.cols())
      throw std::invalid_argument("tensor field: coefficient matrix must be square");
    // Tolerate roundoff-level asymmetry from upstream arithmetic, store exact.
    coeffs_ = 0.5 * (coeffs_ + coeffs_.transpose()).eval();
  }

  static TensorField zero(int modes) {
    return TensorField(Eigen::MatrixXd::Zero(modes, modes));
  }

  int modes() const { return static_cast<int>(coeffs_.rows()); }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  double operator()(int i, int j) const { return coeffs_(i - 1, j - 1); }

  double u_norm() const { return coeffs_.norm(); }

  double u_gamma_norm(const Basis& basis, double gamma) const {
    const int n = modes();
    double acc = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        const double w = std::pow(basis.eigenvalue(i), gamma) *
                         std::pow(basis.eigenvalue(j), gamma);
        acc += w * coeffs_(i - 1, j - 1) * coeffs_(i - 1, j - 1);
      }
    return std::sqrt(acc);
  }

  /// Coefficients on the orthonormal symmetrized basis (length K(K+1)/2);
  /// the Euclidean norm of this vector equals u_norm().
  Eigen::VectorXd sym_coeffs() const {
    const int n = modes();
    Eigen::VectorXd v(SymIndex::size(n));
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= j; ++i)
        v(SymIndex::pos(i, j)) = (i == j) ? coeffs_(i - 1, j - 1)
                                          : kSqrt2 * coeffs_(i - 1, j - 1);
    return v;
  }

  static TensorField from_sym_coeffs(const Eigen::VectorXd& v, int modes) {
    if (v.size() != SymIndex::size(modes))
      throw std::invalid_argument("tensor field: coefficient length mismatch");
    Eigen::MatrixXd m(modes, modes);
    for (int j = 1; j <= modes; ++j)
      for (int i = 1; i <= j; ++i) {
        const double c = v(SymIndex::pos(i, j));
        const double f = (i == j) ? c : c / kSqrt2;
        m(i - 1, j - 1) = f;
        m(j - 1, i - 1) = f;
      }
    return TensorField(std::move(m));
  }

private:
  Eigen::MatrixXd coeffs_;
};

} // namespace shecov

#endif
