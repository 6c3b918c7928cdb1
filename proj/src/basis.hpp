#ifndef SHECOV_BASIS_HPP
#define SHECOV_BASIS_HPP

#include <array>
#include <span>
#include <vector>

namespace shecov {

/// Dirichlet Laplacian eigenbasis of the box (0,pi)^d, d in {1,2}.
///
/// In one dimension the modes are e_k(x) = sqrt(2/pi) sin(k x) with
/// eigenvalue alpha_k = k^2; in two dimensions modes are tensor products of
/// 1-D factors, enumerated row-major over the multi-index. All Galerkin
/// coupling coefficients (triple products int e_k e_m e_i) are closed-form,
/// which keeps every operator entry in the pipeline analytic.
///
/// Immutable after construction; safe to share across threads.
class Basis {
public:
  Basis(int dim, int modes_per_axis);

  int dim() const { return dim_; }
  int modes_per_axis() const { return k_; }
  /// Total number of retained modes (K in d=1, K^2 in d=2).
  int mode_count() const { return count_; }

  /// alpha_k for the 1-based flat index k. Strictly increasing in d=1.
  double eigenvalue(int k) const;

  /// Flat index (1-based) <-> multi-index (1-based per axis) map.
  std::array<int, 2> multi_index(int k) const;
  int flat_index(const std::array<int, 2>& idx) const;

  /// Point evaluation of e_k at x (x.size() == dim, inside the closed box).
  double eval(int k, std::span<const double> x) const;

  /// int_D e_k e_m e_i dx, closed form. Exactly zero when the 1-D parity
  /// k+m+i is even. Fully symmetric in (k, m, i).
  double triple_product(int k, int m, int i) const;

  /// ||e_k||_{L^p(D)} for p > 1 or p = infinity; k-independent for fixed p.
  double lp_norm(int k, double p) const;

  /// Dense 1-D triple-product table t[(k,m,i)], 0-based contiguous storage.
  const std::vector<double>& triple_table_1d() const { return table_; }
  double triple_1d(int k, int m, int i) const {
    return table_[static_cast<std::size_t>(((k - 1) * k_ + (m - 1)) * k_ + (i - 1))];
  }

private:
  void check_index(int k) const;

  int dim_;
  int k_;
  int count_;
  std::vector<double> table_; // K^3 entries, 1-D factors
};

/// Closed form of int_0^pi (2/pi)^{3/2} sin(kx) sin(mx) sin(ix) dx.
double sine_triple_product(int k, int m, int i);

/// Closed form of int_0^pi sin(x)^p dx for p > 0 (via log-gamma).
double sine_power_integral(double p);

} // namespace shecov

#endif
