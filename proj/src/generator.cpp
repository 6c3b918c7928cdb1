#include "generator.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "errors.hpp"

namespace shecov {

namespace {

double sym_weight(int i, int j) { return (i == j) ? 0.5 : 1.0 / kSqrt2; }

void check_pair(int modes, int i, int j) {
  if (i < 1 || j < 1 || i > modes || j > modes)
    throw std::out_of_range("generator: pair (" + std::to_string(i) + "," +
                            std::to_string(j) + ") outside [1, " +
                            std::to_string(modes) + "]^2");
}

} // namespace

Generator Generator::assemble(const Basis& basis, const QSpec& q) {
  Generator gen;
  gen.k_ = basis.mode_count();
  gen.n_ = SymIndex::size(gen.k_);

  gen.a0_ = Eigen::VectorXd(gen.n_);
  for (int p = 0; p < gen.n_; ++p) {
    const auto [i, j] = SymIndex::pair(p);
    gen.a0_(p) = -(basis.eigenvalue(i) + basis.eigenvalue(j));
  }

  // Noise modes share the solution truncation.
  const int kmax = std::min(q.count(), gen.k_);
  std::vector<int> active;
  for (int k = 1; k <= kmax; ++k)
    if (q.lambda(k) != 0.0) active.push_back(k);

  gen.hq_ = Eigen::MatrixXd::Zero(gen.n_, gen.n_);
  for (int pq = 0; pq < gen.n_; ++pq) {
    const auto [m, n] = SymIndex::pair(pq);
    for (int pr = pq; pr < gen.n_; ++pr) {
      const auto [i, j] = SymIndex::pair(pr);
      double acc = 0.0;
      for (int k : active) {
        const double l2 = q.lambda(k) * q.lambda(k);
        acc += l2 * (basis.triple_product(k, m, i) * basis.triple_product(k, n, j) +
                     basis.triple_product(k, n, i) * basis.triple_product(k, m, j));
      }
      const double value = 2.0 * sym_weight(i, j) * sym_weight(m, n) * acc;
      gen.hq_(pr, pq) = value;
      gen.hq_(pq, pr) = value;
    }
  }

  gen.l_ = gen.hq_;
  gen.l_.diagonal() += gen.a0_;
  return gen;
}

TensorField evolve_theta(const SpectralDecomposition& dec, const TensorField& theta0,
                         double t) {
  const int modes = theta0.modes();
  if (dec.size() != SymIndex::size(modes))
    throw std::invalid_argument("evolve_theta: decomposition / field size mismatch");
  return TensorField::from_sym_coeffs(semigroup_apply(dec, t, theta0.sym_coeffs()),
                                      modes);
}

TensorField evolve_theta(const Generator& gen, const TensorField& theta0, double t) {
  return evolve_theta(decompose(gen.matrix()), theta0, t);
}

TensorField theta_ij_initial(int modes, int i, int j) {
  check_pair(modes, i, j);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(modes, modes);
  m(i - 1, j - 1) += 2.0;
  m(j - 1, i - 1) += 2.0;
  return TensorField(std::move(m));
}

TensorField theta_ij_exact(const SpectralDecomposition& dec, int modes, int i, int j,
                           double t0) {
  return evolve_theta(dec, theta_ij_initial(modes, i, j), t0);
}

TensorField theta_ij_exact(const Generator& gen, int i, int j, double t0) {
  return theta_ij_exact(decompose(gen.matrix()), gen.modes(), i, j, t0);
}

HqNormCheck hq_norm_check(const Basis& basis, const QSpec& q, double gamma1,
                          double gamma2) {
  const double d = basis.dim();
  if (!(gamma1 >= 0.0 && gamma1 < d) || !(gamma2 >= 0.0 && gamma2 < d))
    throw std::invalid_argument("hq_norm_check: gamma1, gamma2 must lie in [0, d)");

  const Generator gen = Generator::assemble(basis, q);
  const int n = gen.size();

  // Proposition-style weights: ||f||_{U^g}^2 = sum alpha_i^g alpha_j^g f_ij^2,
  // identical for both entries of an off-diagonal symmetrized pair.
  Eigen::VectorXd w_in(n), w_out(n);
  for (int p = 0; p < n; ++p) {
    const auto [i, j] = SymIndex::pair(p);
    const double aa = basis.eigenvalue(i) * basis.eigenvalue(j);
    w_in(p) = std::pow(aa, -gamma1 / 2.0);   // maps unit U^{g1} ball to coefficients
    w_out(p) = std::pow(aa, -gamma2 / 2.0);  // measures the U^{-g2} norm
  }
  const Eigen::MatrixXd rescaled =
      w_out.asDiagonal() * gen.hq() * w_in.asDiagonal();

  HqNormCheck out;
  // largest singular value through the symmetric Gram spectrum
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram(
      rescaled.transpose() * rescaled);
  if (gram.info() != Eigen::Success)
    throw NumericalError("hq_norm_check: eigensolver failed on the Gram matrix");
  out.operator_norm = std::sqrt(std::max(0.0, gram.eigenvalues().maxCoeff()));
  const LambdaGamma lg =
      detail::lambda_gamma_wide(q, basis, 0.25 * (gamma1 + gamma2));
  out.bound = lg.partial_sum + lg.tail_bound.value_or(0.0);
  return out;
}

} // namespace shecov
