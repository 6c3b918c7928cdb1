#include "basis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace shecov {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr int kMaxModesPerAxis = 64;

// int_0^pi sin(c x) dx = (1 - (-1)^c)/c for integer c != 0, 0 for c = 0.
double sine_integral(int c) {
  if (c == 0) return 0.0;
  return (c % 2 == 0) ? 0.0 : 2.0 / static_cast<double>(c);
}

} // namespace

double sine_triple_product(int k, int m, int i) {
  // Product-to-sum: sin(kx)sin(mx) = (cos((k-m)x) - cos((k+m)x))/2, then
  // cos(ax)sin(ix) = (sin((i+a)x) + sin((i-a)x))/2.
  const double s = sine_integral(i + k - m) + sine_integral(i - k + m) -
                   sine_integral(i + k + m) - sine_integral(i - k - m);
  return std::pow(2.0 / kPi, 1.5) * 0.25 * s;
}

double sine_power_integral(double p) {
  // int_0^pi sin^p = sqrt(pi) Gamma((p+1)/2) / Gamma(p/2 + 1).
  return std::sqrt(kPi) *
         std::exp(std::lgamma(0.5 * (p + 1.0)) - std::lgamma(0.5 * p + 1.0));
}

Basis::Basis(int dim, int modes_per_axis) : dim_(dim), k_(modes_per_axis) {
  if (dim_ != 1 && dim_ != 2)
    throw std::invalid_argument("basis: dim must be 1 or 2, got " + std::to_string(dim_));
  if (k_ < 1 || k_ > kMaxModesPerAxis)
    throw std::invalid_argument("basis: modes per axis must be in [1, " +
                                std::to_string(kMaxModesPerAxis) + "], got " +
                                std::to_string(k_));
  count_ = (dim_ == 1) ? k_ : k_ * k_;

  // One closed-form evaluation per sorted triple, copied to all permutations,
  // so the stored tensor is symmetric to the bit.
  table_.resize(static_cast<std::size_t>(k_) * k_ * k_, 0.0);
  auto at = [this](int a, int b, int c) -> double& {
    return table_[static_cast<std::size_t>(((a - 1) * k_ + (b - 1)) * k_ + (c - 1))];
  };
  for (int k = 1; k <= k_; ++k)
    for (int m = k; m <= k_; ++m)
      for (int i = m; i <= k_; ++i) {
        const double v = ((k + m + i) % 2 == 0) ? 0.0 : sine_triple_product(k, m, i);
        at(k, m, i) = at(k, i, m) = at(m, k, i) = v;
        at(m, i, k) = at(i, k, m) = at(i, m, k) = v;
      }
}

void Basis::check_index(int k) const {
  if (k < 1 || k > count_)
    throw std::out_of_range("basis: mode index " + std::to_string(k) +
                            " outside [1, " + std::to_string(count_) + "]");
}

double Basis::eigenvalue(int k) const {
  check_index(k);
  const auto idx = multi_index(k);
  double a = static_cast<double>(idx[0]) * idx[0];
  if (dim_ == 2) a += static_cast<double>(idx[1]) * idx[1];
  return a;
}

std::array<int, 2> Basis::multi_index(int k) const {
  check_index(k);
  if (dim_ == 1) return {k, 0};
  return {(k - 1) / k_ + 1, (k - 1) % k_ + 1};
}

int Basis::flat_index(const std::array<int, 2>& idx) const {
  if (idx[0] < 1 || idx[0] > k_ || (dim_ == 2 && (idx[1] < 1 || idx[1] > k_)))
    throw std::out_of_range("basis: multi-index outside truncation");
  return (dim_ == 1) ? idx[0] : (idx[0] - 1) * k_ + idx[1];
}

double Basis::eval(int k, std::span<const double> x) const {
  check_index(k);
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("basis: point dimension mismatch");
  for (double c : x)
    if (!(c >= 0.0 && c <= kPi))
      throw std::domain_error("basis: point outside the closed box [0, pi]^d");
  const auto idx = multi_index(k);
  const double amp = std::sqrt(2.0 / kPi);
  double v = amp * std::sin(idx[0] * x[0]);
  if (dim_ == 2) v *= amp * std::sin(idx[1] * x[1]);
  return v;
}

double Basis::triple_product(int k, int m, int i) const {
  check_index(k);
  check_index(m);
  check_index(i);
  if (dim_ == 1) return triple_1d(k, m, i);
  const auto a = multi_index(k), b = multi_index(m), c = multi_index(i);
  return triple_1d(a[0], b[0], c[0]) * triple_1d(a[1], b[1], c[1]);
}

double Basis::lp_norm(int k, double p) const {
  check_index(k);
  if (std::isinf(p) && p > 0)
    return std::pow(std::sqrt(2.0 / kPi), dim_);
  if (!(p > 1.0))
    throw std::invalid_argument("basis: lp_norm requires p > 1 or p = infinity");
  // ||e_k||_p on (0,pi): change of variables makes it independent of k.
  const double one_d = std::pow(2.0 / kPi, 0.5) * std::pow(sine_power_integral(p), 1.0 / p);
  return std::pow(one_d, dim_);
}

} // namespace shecov
