#ifndef SHECOV_INVERSION_HPP
#define SHECOV_INVERSION_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "tensorfield.hpp"

namespace shecov {

/// Final-time correlation family {theta^{i,j}(t0)}, i <= j <= k_obs, with
/// provenance. Monte Carlo data carry per-entry standard errors.
struct ThetaDataset {
  enum class Provenance { exact, monte_carlo };

  double t0 = 0.0;
  int dim = 1;    // spatial dimension of the generating basis
  int modes = 0;  // total retained modes of the stored matrices
  int k_obs = 0;  // pairs cover i <= j <= k_obs
  Provenance provenance = Provenance::exact;
  std::map<std::pair<int, int>, Eigen::MatrixXd> entries;
  std::map<std::pair<int, int>, Eigen::MatrixXd> std_errors;  // MC only
  std::int64_t mc_paths = 0;
  std::uint64_t mc_master_seed = 0;
};

struct SemigroupReconstruction {
  Eigen::MatrixXd m_rec;       // symmetrized estimate of e^{L t0}
  double asymmetry = 0.0;      // ||M - M^T||_F / ||M||_F before symmetrizing
  Eigen::MatrixXd variance;    // entrywise variance of m_rec (zero for exact data)
};

/// Rebuild e^{L t0} column by column from the data family: theta^{i,j}(0) has
/// coefficients 2(d_mi d_nj + d_mj d_ni), so each stored matrix is e^{L t0}
/// applied to a scaled symmetrized basis vector. Requires full pair coverage
/// with k_obs equal to the stored truncation.
SemigroupReconstruction reconstruct_semigroup(const ThetaDataset& data);

struct RecoveredGenerator {
  Eigen::MatrixXd l_rec;
  Eigen::MatrixXd hq_rec;        // l_rec - A0; meaningless on the dropped subspace
  int recovered_rank = 0;
  std::vector<int> dropped;      // spectral positions below the logarithm floor
  double floor_used = 0.0;
  Eigen::MatrixXd hq_variance;   // first-order propagated (MC data), else empty
};

/// Spectral logarithm of the reconstructed semigroup followed by subtraction
/// of the known Laplacian part. floor < 0 selects the default
/// 1e-12 * max(mu).
RecoveredGenerator recover_generator(const Eigen::MatrixXd& m_rec, const Basis& basis,
                                     double t0, double floor,
                                     const Eigen::MatrixXd* m_variance = nullptr);

struct PairingExtraction {
  std::vector<double> lambda_sq;    // <HQ (chi x chi), e_k x e_k> per mode
  double chi_residual = 0.0;        // ||chi_D - sum c_m e_m||_{L^2}
  std::vector<double> error_bound;  // per-mode bound from the indicator truncation
};

/// Indicator-pairing extractor: expand the domain indicator in the retained
/// basis and read lambda_k^2 off the pairing <HQ (chi x chi), e_k (x) e_k>,
/// exact in the untruncated limit. Subject to the slow (Gibbs) convergence
/// of the indicator series.
PairingExtraction extract_lambdas_pairing(const Eigen::MatrixXd& hq_rec,
                                          const Basis& basis);

struct LsqExtraction {
  std::vector<double> lambda_sq;
  double residual = 0.0;                       // relative Frobenius residual
  std::vector<double> lambda_sq_std_error;     // propagated, when variance given
};

/// Structure-exploiting extractor: nonnegative least squares over the span of
/// the per-mode kernel matrices; exact at finite truncation.
LsqExtraction extract_lambdas_lsq(const Eigen::MatrixXd& hq_rec, const Basis& basis,
                                  const Eigen::MatrixXd* hq_variance = nullptr);

struct InversionReport {
  int modes = 0;
  double t0 = 0.0;
  double floor_used = 0.0;
  int recovered_rank = 0;
  std::vector<int> dropped;
  double asymmetry = 0.0;
  PairingExtraction pairing;
  LsqExtraction lsq;
  double ms_reconstruct = 0.0;
  double ms_recover = 0.0;
  double ms_extract = 0.0;
};

/// reconstruct -> recover -> both extractors, with per-stage timings.
InversionReport invert_dataset(const ThetaDataset& data, const Basis& basis,
                               double floor);

/// L^2 coefficients of the domain indicator, c_m = int_D e_m.
Eigen::VectorXd indicator_coeffs(const Basis& basis);

} // namespace shecov

#endif
