#include "spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "errors.hpp"
#include "generator.hpp"
#include "noise.hpp"

namespace shecov {

SpectralDecomposition decompose(const Eigen::MatrixXd& l, double cluster_tol) {
  if (l.rows() != l.cols())
    throw ContractViolation("decompose: matrix must be square");
  const double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  const double asym = (l - l.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw ContractViolation("decompose: input is not symmetric (max asymmetry " +
                            std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (l + l.transpose()));
  if (solver.info() != Eigen::Success)
    throw NumericalError("decompose: symmetric eigensolver failed to converge");

  const int n = static_cast<int>(l.rows());
  SpectralDecomposition dec;
  dec.sigmas = solver.eigenvalues().reverse();
  dec.vectors = solver.eigenvectors().rowwise().reverse();

  const double tau = cluster_tol * std::max(dec.sigmas.cwiseAbs().maxCoeff(), 1e-300);
  for (int begin = 0; begin < n;) {
    int end = begin + 1;
    while (end < n && std::abs(dec.sigmas(end) - dec.sigmas(end - 1)) <= tau) ++end;
    dec.clusters.emplace_back(begin, end);
    begin = end;
  }
  return dec;
}

Eigen::VectorXd semigroup_apply(const SpectralDecomposition& dec, double t,
                                const Eigen::VectorXd& x) {
  if (!(t >= 0.0))
    throw std::invalid_argument("semigroup_apply: t must be >= 0 (backward evolution "
                                "goes through the spectral logarithm)");
  const Eigen::VectorXd y = dec.vectors.transpose() * x;
  return dec.vectors * (dec.sigmas.array() * t).exp().matrix().asDiagonal() * y;
}

Eigen::MatrixXd semigroup_matrix(const SpectralDecomposition& dec, double t) {
  if (!(t >= 0.0))
    throw std::invalid_argument("semigroup_matrix: t must be >= 0");
  return dec.vectors * (dec.sigmas.array() * t).exp().matrix().asDiagonal() *
         dec.vectors.transpose();
}

SpectralLogResult spectral_log(const Eigen::MatrixXd& m, double t0, double floor) {
  if (!(t0 > 0.0)) throw std::invalid_argument("spectral_log: t0 must be > 0");
  const SpectralDecomposition dec = decompose(m);

  SpectralLogResult out;
  const int n = dec.size();
  const double mu_max = dec.sigmas(0);
  out.floor_used = (floor < 0.0) ? kDefaultLogFloorRel * std::max(mu_max, 0.0) : floor;

  Eigen::VectorXd log_sigma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd keep = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    const double mu = dec.sigmas(k);
    if (mu >= out.floor_used) {
      if (mu <= 0.0)
        throw SpectralPositivityError(
            "spectral_log: retained eigenvalue mu_" + std::to_string(k) + " = " +
            std::to_string(mu) + " is not positive; the logarithm needs a positive floor");
      log_sigma(k) = std::log(mu) / t0;
      keep(k) = 1.0;
      ++out.recovered_rank;
    } else if (mu > -out.floor_used) {
      // decayed past recoverability (|mu| below the floor): flagged, not fatal
      out.dropped.push_back(k);
    } else {
      // a negative eigenvalue at recoverable magnitude means the data are too
      // noisy for backward recovery; abort rather than clip
      throw SpectralPositivityError(
          "spectral_log: eigenvalue mu_" + std::to_string(k) + " = " +
          std::to_string(mu) + " is negative beyond the floor; data too noisy "
          "for the logarithm");
    }
  }
  out.l_rec = dec.vectors * (log_sigma.array() * keep.array()).matrix().asDiagonal() *
              dec.vectors.transpose();
  out.l_rec = 0.5 * (out.l_rec + out.l_rec.transpose()).eval();
  return out;
}

std::vector<TrotterRow> trotter_check(const Basis& basis, const QSpec& q, double t,
                                      std::span<const int> step_counts) {
  const Generator gen = Generator::assemble(basis, q);
  const SpectralDecomposition full = decompose(gen.matrix());
  const SpectralDecomposition hq = decompose(gen.hq());
  const Eigen::MatrixXd reference = semigroup_matrix(full, t);

  std::vector<TrotterRow> rows;
  rows.reserve(step_counts.size());
  for (int n : step_counts) {
    if (n < 1) throw std::invalid_argument("trotter_check: step counts must be >= 1");
    const double s = t / n;
    const Eigen::MatrixXd step =
        semigroup_matrix(hq, s) *
        (gen.a0_diagonal().array() * s).exp().matrix().asDiagonal();
    // binary powering of the one-step map
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(step.rows(), step.cols());
    Eigen::MatrixXd base = step;
    for (int e = n; e > 0; e >>= 1) {
      if (e & 1) acc = (acc * base).eval();
      if (e > 1) base = (base * base).eval();
    }
    rows.push_back({n, (acc - reference).norm()});
  }
  return rows;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need matching samples, >= 2");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace shecov
