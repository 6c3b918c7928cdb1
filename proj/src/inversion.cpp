#include "inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "errors.hpp"
#include "spectral.hpp"

namespace shecov {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kExactAsymmetryTol = 1e-10;

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Column scaling: theta^{i,j}(0) = s_ij * sym basis vector (i,j); the
// initial coefficients 2(d_mi d_nj + d_mj d_ni) give 4 on diagonal pairs.
double initial_scale(int i, int j) { return (i == j) ? 4.0 : 2.0 * kSqrt2; }

// Per-mode kernel matrix of the HQ assembly on the symmetrized basis: the
// contribution of unit lambda_k^2 for one noise mode k.
Eigen::MatrixXd design_matrix(const Basis& basis, int k) {
  const int modes = basis.mode_count();
  const int n = SymIndex::size(modes);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  auto weight = [](int a, int b) { return a == b ? 0.5 : 1.0 / kSqrt2; };
  for (int pq = 0; pq < n; ++pq) {
    const auto [m, nn] = SymIndex::pair(pq);
    for (int pr = pq; pr < n; ++pr) {
      const auto [i, j] = SymIndex::pair(pr);
      const double acc =
          basis.triple_product(k, m, i) * basis.triple_product(k, nn, j) +
          basis.triple_product(k, nn, i) * basis.triple_product(k, m, j);
      const double value = 2.0 * weight(i, j) * weight(m, nn) * acc;
      g(pr, pq) = value;
      g(pq, pr) = value;
    }
  }
  return g;
}

// Lawson--Hanson active set on the normal equations; gram is SPD up to the
// rank guard applied by the caller.
Eigen::VectorXd nnls(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs) {
  const int n = static_cast<int>(rhs.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);

  auto solve_passive = [&](const std::vector<int>& idx) {
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (int r = 0; r < m; ++r) {
      b(r) = rhs(idx[r]);
      for (int c = 0; c < m; ++c) a(r, c) = gram(idx[r], idx[c]);
    }
    return Eigen::VectorXd(a.ldlt().solve(b));
  };

  const double tol = 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff());
  for (int round = 0; round < 4 * n; ++round) {
    const Eigen::VectorXd w = rhs - gram * x;
    int best = -1;
    double best_w = tol;
    for (int k = 0; k < n; ++k)
      if (!passive[k] && w(k) > best_w) {
        best_w = w(k);
        best = k;
      }
    if (best < 0) break;
    passive[best] = true;

    for (;;) {
      std::vector<int> idx;
      for (int k = 0; k < n; ++k)
        if (passive[k]) idx.push_back(k);
      const Eigen::VectorXd z = solve_passive(idx);
      bool feasible = true;
      double alpha = 1.0;
      for (int r = 0; r < static_cast<int>(idx.size()); ++r)
        if (z(r) <= 0.0) {
          feasible = false;
          const double xi = x(idx[r]);
          alpha = std::min(alpha, xi / (xi - z(r)));
        }
      if (feasible) {
        for (int r = 0; r < static_cast<int>(idx.size()); ++r) x(idx[r]) = z(r);
        break;
      }
      for (int r = 0; r < static_cast<int>(idx.size()); ++r) {
        const int k = idx[r];
        x(k) += alpha * (z(r) - x(k));
        if (x(k) <= tol) {
          x(k) = 0.0;
          passive[k] = false;
        }
      }
    }
  }
  return x;
}

} // namespace

Eigen::VectorXd indicator_coeffs(const Basis& basis) {
  const int modes = basis.mode_count();
  auto c1 = [](int m) {
    return (m % 2 == 0) ? 0.0 : std::sqrt(2.0 / kPi) * 2.0 / static_cast<double>(m);
  };
  Eigen::VectorXd c(modes);
  for (int k = 1; k <= modes; ++k) {
    const auto idx = basis.multi_index(k);
    c(k - 1) = (basis.dim() == 1) ? c1(idx[0]) : c1(idx[0]) * c1(idx[1]);
  }
  return c;
}

SemigroupReconstruction reconstruct_semigroup(const ThetaDataset& data) {
  if (!(data.t0 > 0.0))
    throw std::invalid_argument("reconstruct: dataset must carry t0 > 0");
  if (data.k_obs != data.modes)
    throw CoverageError("reconstruct: needs the full family up to K_obs = K (K_obs " +
                        std::to_string(data.k_obs) + ", K " +
                        std::to_string(data.modes) + ")");
  const int modes = data.modes;
  const int n = SymIndex::size(modes);

  Eigen::MatrixXd raw(n, n);
  Eigen::MatrixXd var_raw = Eigen::MatrixXd::Zero(n, n);
  const bool mc = data.provenance == ThetaDataset::Provenance::monte_carlo;
  for (int j = 1; j <= modes; ++j)
    for (int i = 1; i <= j; ++i) {
      const auto it = data.entries.find({i, j});
      if (it == data.entries.end())
        throw CoverageError("reconstruct: missing pair (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
      if (it->second.rows() != modes || it->second.cols() != modes)
        throw std::invalid_argument("reconstruct: matrix size mismatch for pair (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
      const double scale = initial_scale(i, j);
      const int col = SymIndex::pos(i, j);
      raw.col(col) = TensorField(it->second).sym_coeffs() / scale;
      if (mc) {
        const auto se = data.std_errors.find({i, j});
        if (se != data.std_errors.end()) {
          for (int p = 0; p < n; ++p) {
            const auto [a, b] = SymIndex::pair(p);
            const double sigma = se->second(a - 1, b - 1) * (a == b ? 1.0 : kSqrt2);
            var_raw(p, col) = (sigma * sigma) / (scale * scale);
          }
        }
      }
    }

  SemigroupReconstruction out;
  const double norm = std::max(raw.norm(), 1e-300);
  out.asymmetry = (raw - raw.transpose()).norm() / norm;
  if (!mc && out.asymmetry > kExactAsymmetryTol)
    throw ContractViolation("reconstruct: exact-provenance data are asymmetric beyond "
                            "tolerance (diagnostic " + std::to_string(out.asymmetry) + ")");
  out.m_rec = 0.5 * (raw + raw.transpose());
  out.variance = 0.25 * (var_raw + var_raw.transpose());
  return out;
}

RecoveredGenerator recover_generator(const Eigen::MatrixXd& m_rec, const Basis& basis,
                                     double t0, double floor,
                                     const Eigen::MatrixXd* m_variance) {
  const int modes = basis.mode_count();
  const int n = SymIndex::size(modes);
  if (m_rec.rows() != n || m_rec.cols() != n)
    throw std::invalid_argument("recover: matrix size does not match the basis");

  const SpectralLogResult log = spectral_log(m_rec, t0, floor);

  RecoveredGenerator out;
  out.l_rec = log.l_rec;
  out.recovered_rank = log.recovered_rank;
  out.dropped = log.dropped;
  out.floor_used = log.floor_used;

  out.hq_rec = log.l_rec;
  for (int p = 0; p < n; ++p) {
    const auto [i, j] = SymIndex::pair(p);
    out.hq_rec(p, p) += basis.eigenvalue(i) + basis.eigenvalue(j);
  }

  if (m_variance && m_variance->size() > 0 && m_variance->cwiseAbs().maxCoeff() > 0.0) {
    // First-order propagation through the spectral logarithm: in the
    // eigenbasis of m_rec the log acts entrywise with the divided difference
    // of ln, and rotations propagate variances through squared entries.
    const SpectralDecomposition dec = decompose(m_rec);
    const Eigen::MatrixXd w = dec.vectors.cwiseProduct(dec.vectors);
    const Eigen::MatrixXd var_eig = w.transpose() * (*m_variance) * w;
    Eigen::MatrixXd gain(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double mu_a = dec.sigmas(a), mu_b = dec.sigmas(b);
        double g = 0.0;
        if (mu_a > 0.0 && mu_b > 0.0) {
          g = (std::abs(mu_a - mu_b) > 1e-12 * std::max(mu_a, mu_b))
                  ? (std::log(mu_a) - std::log(mu_b)) / (mu_a - mu_b)
                  : 1.0 / mu_a;
        }
        gain(a, b) = g / t0;
      }
    out.hq_variance = w * var_eig.cwiseProduct(gain.cwiseProduct(gain)) * w.transpose();
  }
  return out;
}

PairingExtraction extract_lambdas_pairing(const Eigen::MatrixXd& hq_rec,
                                          const Basis& basis) {
  const int modes = basis.mode_count();
  const int n = SymIndex::size(modes);
  if (hq_rec.rows() != n || hq_rec.cols() != n)
    throw std::invalid_argument("pairing: matrix size does not match the basis");

  const Eigen::VectorXd c = indicator_coeffs(basis);
  const double domain_volume = std::pow(kPi, basis.dim());
  const double captured = c.squaredNorm();
  PairingExtraction out;
  out.chi_residual = std::sqrt(std::max(0.0, domain_volume - captured));

  out.lambda_sq.resize(modes);
  out.error_bound.resize(modes);
  for (int k = 1; k <= modes; ++k) {
    const int row = SymIndex::pos(k, k);
    double est = 0.0;
    for (int m = 1; m <= modes; ++m) {
      est += c(m - 1) * c(m - 1) * hq_rec(row, SymIndex::pos(m, m));
      for (int nn = m + 1; nn <= modes; ++nn)
        est += 2.0 * c(m - 1) * c(nn - 1) * hq_rec(row, SymIndex::pos(m, nn)) / kSqrt2;
    }
    out.lambda_sq[k - 1] = est;
    // |<chi x chi - chi_K x chi_K, HQ(e_k x e_k)>| <= 2 ||chi|| rho ||column||
    out.error_bound[k - 1] =
        2.0 * std::sqrt(domain_volume) * out.chi_residual * hq_rec.col(row).norm();
  }
  return out;
}

LsqExtraction extract_lambdas_lsq(const Eigen::MatrixXd& hq_rec, const Basis& basis,
                                  const Eigen::MatrixXd* hq_variance) {
  const int modes = basis.mode_count();
  const int n = SymIndex::size(modes);
  if (hq_rec.rows() != n || hq_rec.cols() != n)
    throw std::invalid_argument("lsq: matrix size does not match the basis");

  std::vector<Eigen::MatrixXd> design;
  design.reserve(modes);
  for (int k = 1; k <= modes; ++k) design.push_back(design_matrix(basis, k));

  Eigen::MatrixXd gram(modes, modes);
  Eigen::VectorXd rhs(modes);
  for (int a = 0; a < modes; ++a) {
    rhs(a) = design[a].cwiseProduct(hq_rec).sum();
    for (int b = a; b < modes; ++b) {
      gram(a, b) = design[a].cwiseProduct(design[b]).sum();
      gram(b, a) = gram(a, b);
    }
  }

  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(modes - 1);
    if (!(lo > 1e-12 * std::max(hi, 1e-300)))
      throw NumericalError("lsq: design is rank deficient (gram eigenvalue ratio " +
                           std::to_string(lo / std::max(hi, 1e-300)) + ")");
  }

  const Eigen::VectorXd x = nnls(gram, rhs);

  LsqExtraction out;
  out.lambda_sq.assign(x.data(), x.data() + modes);
  Eigen::MatrixXd fitted = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < modes; ++k) fitted += x(k) * design[k];
  const double data_norm = hq_rec.norm();
  out.residual = (data_norm > 0.0) ? (fitted - hq_rec).norm() / data_norm : 0.0;

  if (hq_variance && hq_variance->size() > 0) {
    // Unconstrained sensitivity x = Gram^{-1} g(HQ); the active-set
    // nonlinearity is ignored, so treat these as first-order error bars.
    const Eigen::MatrixXd gram_inv = gram.ldlt().solve(
        Eigen::MatrixXd::Identity(modes, modes));
    out.lambda_sq_std_error.resize(modes);
    for (int k = 0; k < modes; ++k) {
      Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(n, n);
      for (int l = 0; l < modes; ++l) sens += gram_inv(k, l) * design[l];
      out.lambda_sq_std_error[k] =
          std::sqrt(sens.cwiseProduct(sens).cwiseProduct(*hq_variance).sum());
    }
  }
  return out;
}

InversionReport invert_dataset(const ThetaDataset& data, const Basis& basis,
                               double floor) {
  if (basis.mode_count() != data.modes)
    throw std::invalid_argument("invert: basis truncation does not match the dataset");

  InversionReport report;
  report.modes = data.modes;
  report.t0 = data.t0;

  auto clock0 = std::chrono::steady_clock::now();
  const SemigroupReconstruction rec = reconstruct_semigroup(data);
  report.asymmetry = rec.asymmetry;
  report.ms_reconstruct = ms_since(clock0);

  clock0 = std::chrono::steady_clock::now();
  const bool mc = data.provenance == ThetaDataset::Provenance::monte_carlo;
  const RecoveredGenerator gen =
      recover_generator(rec.m_rec, basis, data.t0, floor, mc ? &rec.variance : nullptr);
  report.floor_used = gen.floor_used;
  report.recovered_rank = gen.recovered_rank;
  report.dropped = gen.dropped;
  report.ms_recover = ms_since(clock0);

  clock0 = std::chrono::steady_clock::now();
  report.pairing = extract_lambdas_pairing(gen.hq_rec, basis);
  report.lsq = extract_lambdas_lsq(gen.hq_rec, basis,
                                   gen.hq_variance.size() > 0 ? &gen.hq_variance : nullptr);
  report.ms_extract = ms_since(clock0);
  return report;
}

} // namespace shecov
