#ifndef SHECOV_NOISE_HPP
#define SHECOV_NOISE_HPP

#include <optional>
#include <string>
#include <vector>

#include "basis.hpp"

namespace shecov {

/// Covariance eigenvalues {lambda_k} of the noise operator Q, diagonal in the
/// Laplacian eigenbasis. Either an explicit truncated list or a power-law
/// family lambda_k = c k^{-s} materialized at truncation K.
class QSpec {
public:
  static QSpec from_list(std::vector<double> lambdas);
  static QSpec from_power(double c, double s, int truncation);

  int count() const { return static_cast<int>(lambdas_.size()); }
  /// lambda_k, 1-based; zero beyond the stored truncation.
  double lambda(int k) const;
  const std::vector<double>& lambdas() const { return lambdas_; }

  bool is_power() const { return power_.has_value(); }
  double power_amplitude() const { return power_->c; }
  double power_exponent() const { return power_->s; }

private:
  QSpec() = default;
  struct Power {
    double c;
    double s;
  };
  std::vector<double> lambdas_;
  std::optional<Power> power_;
};

struct LambdaGamma {
  double partial_sum = 0.0;                // sum over retained modes
  std::optional<double> tail_bound = {};   // analytic tail, power families s > 1/2
};

/// Lambda_{gamma,Q} = sum_k lambda_k^2 ||e_k||_{L^{d/(2 gamma)}}^2 over the
/// truncation; gamma = 0 reads the norm in L^infinity. Valid gamma in [0, d/4).
LambdaGamma lambda_gamma(const QSpec& q, const Basis& basis, double gamma);

struct WellPosedReport {
  bool admissible = false;
  std::optional<double> witness_gamma = {};
  std::string note;
};

/// Scans a fixed grid of gamma in [0, 1/2 ^ d/4) and reports the first value
/// whose Lambda (partial sum plus tail bound when available) is finite. A
/// truncated system is always admissible.
WellPosedReport check_wellposed(const QSpec& q, const Basis& basis);

namespace detail {
// Lambda evaluation on the wider range gamma in [0, d/2) needed by the
// H_Q operator-norm bound (index (gamma1+gamma2)/4 with gamma1,gamma2 < d).
LambdaGamma lambda_gamma_wide(const QSpec& q, const Basis& basis, double gamma);
} // namespace detail

} // namespace shecov

#endif
