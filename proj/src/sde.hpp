#ifndef SHECOV_SDE_HPP
#define SHECOV_SDE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "basis.hpp"
#include "noise.hpp"

namespace shecov {

enum class SchemeKind { euler_maruyama, exponential_euler };

SchemeKind scheme_kind_from_string(const std::string& name);
std::string to_string(SchemeKind kind);

struct SdeScheme {
  SchemeKind kind = SchemeKind::exponential_euler;
  double dt = 1e-3;
};

/// Monte Carlo ensemble description. Per-path seeds derive from the master
/// seed through a counter hash, so the estimator is a pure function of its
/// inputs at any thread count.
struct MCEnsemble {
  std::int64_t paths = 20000;
  std::uint64_t master_seed = 0;
  SdeScheme scheme{};
  int threads = 0;  // 0 = hardware concurrency
};

/// Coefficient vector of the unit initial field e_k.
Eigen::VectorXd unit_field(int modes, int k);

/// One step of the truncated Galerkin system
///   du_i = -alpha_i u_i dt + sum_k lambda_k (sum_m T[k][m][i] u_m) dbeta_k.
/// noise holds one N(0, dt) increment per retained noise mode.
/// euler_maruyama treats the drift explicitly. exponential_euler applies the
/// exact factor exp(-alpha_i dt) to the state and weights the noise by
/// sqrt((1 - e^{-2 alpha_i dt})/(2 alpha_i dt)), the integrated variance of
/// the damped mode over one step, so the per-mode second moment of the
/// linear-diffusion pair is exact per step.
Eigen::VectorXd drift_diffusion_step(const Eigen::VectorXd& u, const Basis& basis,
                                     const QSpec& q, const SdeScheme& scheme,
                                     std::span<const double> noise);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// Deterministic function of (inputs, path_seed). Throws DivergenceError with
/// the failing step index when the state leaves the representable range.
Eigen::VectorXd simulate_path(const Eigen::VectorXd& u0, double t, const Basis& basis,
                              const QSpec& q, const SdeScheme& scheme,
                              std::uint64_t path_seed,
                              Trajectory* trajectory = nullptr,
                              std::int64_t path_index = 0);

struct ThetaEstimate {
  Eigen::MatrixXd theta;      // exactly symmetric sample mean of u (x) u
  Eigen::MatrixXd std_error;  // entrywise standard error of the mean
};

/// theta_hat[i][j] = (1/M) sum_p u_i u_j at time t from u0. The mean is
/// accumulated pairwise in path order, so reruns are bit-identical.
ThetaEstimate mc_theta(const Eigen::VectorXd& u0, double t, const Basis& basis,
                       const QSpec& q, const MCEnsemble& ensemble);

/// theta^{i,j}(t) = theta(t, e_i + e_j) - theta(t, e_i - e_j) with common
/// random numbers: both runs share per-path seeds, so std_error measures the
/// spread of the per-path difference.
ThetaEstimate mc_theta_ij(int i, int j, double t, const Basis& basis, const QSpec& q,
                          const MCEnsemble& ensemble);

} // namespace shecov

#endif
