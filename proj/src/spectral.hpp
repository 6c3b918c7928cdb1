#ifndef SHECOV_SPECTRAL_HPP
#define SHECOV_SPECTRAL_HPP

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

namespace shecov {

class Basis;
class QSpec;

/// Full spectral decomposition of a symmetric matrix, eigenvalues descending,
/// with near-equal eigenvalues grouped into multiplicity clusters. Each
/// cluster stands for one spectral projector E_k; grouping uses the relative
/// tolerance tau = cluster_tol * max|sigma|.
struct SpectralDecomposition {
  Eigen::VectorXd sigmas;                      // descending
  Eigen::MatrixXd vectors;                     // orthonormal columns
  std::vector<std::pair<int, int>> clusters;   // [begin, end) index ranges

  int size() const { return static_cast<int>(sigmas.size()); }
  Eigen::MatrixXd reconstruct() const {
    return vectors * sigmas.asDiagonal() * vectors.transpose();
  }
};

inline constexpr double kDefaultClusterTol = 1e-8;

/// Symmetric eigendecomposition; throws ContractViolation when the input is
/// visibly non-symmetric and NumericalError when the solver fails.
SpectralDecomposition decompose(const Eigen::MatrixXd& l,
                                double cluster_tol = kDefaultClusterTol);

/// e^{Lt} x through the eigenbasis; t >= 0.
Eigen::VectorXd semigroup_apply(const SpectralDecomposition& dec, double t,
                                const Eigen::VectorXd& x);

/// Dense e^{Lt}; t >= 0.
Eigen::MatrixXd semigroup_matrix(const SpectralDecomposition& dec, double t);

struct SpectralLogResult {
  Eigen::MatrixXd l_rec;        // sum over retained modes of ln(mu)/t0 v v^T
  int recovered_rank = 0;       // number of eigenvalues at or above the floor
  std::vector<int> dropped;     // 0-based eigenvalue positions below the floor
  double floor_used = 0.0;
};

/// Spectral logarithm of a symmetric matrix at observation time t0. Modes
/// with |mu_k| < floor are unrecoverable (their sigma lies below
/// ln(floor)/t0) and are dropped; a negative mu_k at recoverable magnitude,
/// or a retained mu_k <= 0, raises SpectralPositivityError. Passing
/// floor < 0 selects the default 1e-12 * max(mu). With floor = 0 the
/// exp/log round trip holds to ~1e-8 relative as long as e^{sigma_min t0}
/// stays above roughly 1e-300 (double-precision underflow).
SpectralLogResult spectral_log(const Eigen::MatrixXd& m, double t0, double floor);

inline constexpr double kDefaultLogFloorRel = 1e-12;

struct TrotterRow {
  int n;
  double error;   // ||(e^{HQ t/n} e^{A0 t/n})^n - e^{Lt}||_F
};

/// Lie--Trotter product diagnostics for the split L = A0 + HQ.
std::vector<TrotterRow> trotter_check(const Basis& basis, const QSpec& q, double t,
                                      std::span<const int> step_counts);

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace shecov

#endif
