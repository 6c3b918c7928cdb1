#include "noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace shecov {

QSpec QSpec::from_list(std::vector<double> lambdas) {
  for (double v : lambdas)
    if (!(v >= 0.0))
      throw std::invalid_argument("q: eigenvalues must be nonnegative");
  QSpec q;
  q.lambdas_ = std::move(lambdas);
  return q;
}

QSpec QSpec::from_power(double c, double s, int truncation) {
  if (!(c > 0.0)) throw std::invalid_argument("q: power family needs amplitude c > 0");
  if (!(s >= 0.0)) throw std::invalid_argument("q: power family needs exponent s >= 0");
  if (truncation < 1) throw std::invalid_argument("q: power family needs truncation >= 1");
  QSpec q;
  q.lambdas_.resize(truncation);
  for (int k = 1; k <= truncation; ++k)
    q.lambdas_[k - 1] = c * std::pow(static_cast<double>(k), -s);
  q.power_ = Power{c, s};
  return q;
}

double QSpec::lambda(int k) const {
  if (k < 1) throw std::out_of_range("q: mode index must be >= 1");
  if (k > count()) return 0.0;
  return lambdas_[k - 1];
}

namespace {

LambdaGamma lambda_gamma_impl(const QSpec& q, const Basis& basis, double gamma,
                              double gamma_sup) {
  const double d = basis.dim();
  if (!(gamma >= 0.0) || !(gamma < gamma_sup))
    throw std::invalid_argument("lambda_gamma: gamma outside [0, " +
                                std::to_string(gamma_sup) + ")");
  const double p = (gamma == 0.0) ? std::numeric_limits<double>::infinity()
                                  : d / (2.0 * gamma);
  // ||e_k||_{L^p} does not depend on k for the sine basis.
  const double norm_sq = std::pow(basis.lp_norm(1, p), 2);

  LambdaGamma out;
  const int kmax = std::min(q.count(), basis.mode_count());
  for (int k = 1; k <= kmax; ++k) {
    const double l = q.lambda(k);
    out.partial_sum += l * l * norm_sq;
  }
  // Modes beyond the basis truncation still contribute to the declared model.
  for (int k = basis.mode_count() + 1; k <= q.count(); ++k) {
    const double l = q.lambda(k);
    out.partial_sum += l * l * norm_sq;
  }
  if (q.is_power() && q.power_exponent() > 0.5) {
    // sum_{k > K} c^2 k^{-2s} <= c^2 K^{1-2s} / (2s - 1)
    const double c = q.power_amplitude();
    const double s = q.power_exponent();
    const double big_k = static_cast<double>(q.count());
    out.tail_bound = norm_sq * c * c * std::pow(big_k, 1.0 - 2.0 * s) / (2.0 * s - 1.0);
  }
  return out;
}

} // namespace

LambdaGamma lambda_gamma(const QSpec& q, const Basis& basis, double gamma) {
  return lambda_gamma_impl(q, basis, gamma, basis.dim() / 4.0);
}

LambdaGamma detail::lambda_gamma_wide(const QSpec& q, const Basis& basis, double gamma) {
  return lambda_gamma_impl(q, basis, gamma, basis.dim() / 2.0);
}

WellPosedReport check_wellposed(const QSpec& q, const Basis& basis) {
  const double gamma_sup = std::min(0.5, basis.dim() / 4.0);
  constexpr int kGridPoints = 32;

  WellPosedReport report;
  for (int i = 0; i < kGridPoints; ++i) {
    const double gamma = gamma_sup * static_cast<double>(i) / kGridPoints;
    const LambdaGamma lg = lambda_gamma(q, basis, gamma);
    const double total = lg.partial_sum + lg.tail_bound.value_or(0.0);
    if (std::isfinite(total)) {
      report.admissible = true;
      report.witness_gamma = gamma;
      break;
    }
  }
  if (q.is_power() && q.power_exponent() > 0.5)
    report.note = "power family: Lambda certified including the analytic tail";
  else
    report.note = "finite truncation: the truncated system is well-posed as declared";
  return report;
}

} // namespace shecov
