#include <doctest.h>

#include <cmath>
#include <vector>

#include "commands.hpp"
#include "errors.hpp"
#include "generator.hpp"
#include "inversion.hpp"
#include "rng.hpp"
#include "sde.hpp"
#include "spectral.hpp"

using namespace shecov;

namespace {

ThetaDataset exact_dataset(const Basis& basis, const QSpec& q, double t0) {
  const Generator gen = Generator::assemble(basis, q);
  const SpectralDecomposition dec = decompose(gen.matrix());
  ThetaDataset data;
  data.t0 = t0;
  data.dim = basis.dim();
  data.modes = basis.mode_count();
  data.k_obs = basis.mode_count();
  data.provenance = ThetaDataset::Provenance::exact;
  for (int j = 1; j <= data.modes; ++j)
    for (int i = 1; i <= j; ++i)
      data.entries[{i, j}] = theta_ij_exact(dec, data.modes, i, j, t0).coeffs();
  return data;
}

ThetaDataset mc_dataset(const Basis& basis, const QSpec& q, double t0,
                        std::int64_t paths, std::uint64_t master_seed) {
  ThetaDataset data;
  data.t0 = t0;
  data.dim = basis.dim();
  data.modes = basis.mode_count();
  data.k_obs = basis.mode_count();
  data.provenance = ThetaDataset::Provenance::monte_carlo;
  data.mc_paths = paths;
  data.mc_master_seed = master_seed;
  for (int j = 1; j <= data.modes; ++j)
    for (int i = 1; i <= j; ++i) {
      MCEnsemble ensemble{paths,
                          derive_substream_seed(master_seed, 1, SymIndex::pos(i, j)),
                          {SchemeKind::exponential_euler, 1e-3},
                          0};
      const ThetaEstimate est = mc_theta_ij(i, j, t0, basis, q, ensemble);
      data.entries[{i, j}] = est.theta;
      data.std_errors[{i, j}] = est.std_error;
    }
  return data;
}

} // namespace

TEST_CASE("reconstruct_semigroup: exact data rebuild e^{L t0}") {
  const Basis basis(1, 4);
  const QSpec q = QSpec::from_power(0.5, 2.0, 4);
  const Generator gen = Generator::assemble(basis, q);
  const SpectralDecomposition dec = decompose(gen.matrix());
  const double t0 = 0.1;

  const SemigroupReconstruction rec = reconstruct_semigroup(exact_dataset(basis, q, t0));
  const Eigen::MatrixXd reference = semigroup_matrix(dec, t0);
  CHECK((rec.m_rec - reference).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rec.asymmetry < 1e-13);
}

TEST_CASE("reconstruct_semigroup: initial tensors give the identity") {
  const Basis basis(1, 3);
  ThetaDataset data;
  data.t0 = 1e-9;  // the t0 -> 0 limit: entries are the initial tensors
  data.dim = 1;
  data.modes = 3;
  data.k_obs = 3;
  data.provenance = ThetaDataset::Provenance::exact;
  for (int j = 1; j <= 3; ++j)
    for (int i = 1; i <= j; ++i) data.entries[{i, j}] = theta_ij_initial(3, i, j).coeffs();

  const SemigroupReconstruction rec = reconstruct_semigroup(data);
  CHECK((rec.m_rec - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruct_semigroup: coverage and contract errors") {
  const Basis basis(1, 3);
  const QSpec q = QSpec::from_power(0.5, 2.0, 3);
  ThetaDataset data = exact_dataset(basis, q, 0.1);

  SUBCASE("missing pair is named") {
    data.entries.erase({1, 2});
    try {
      (void)reconstruct_semigroup(data);
      FAIL("expected CoverageError");
    } catch (const CoverageError& e) {
      CHECK(std::string(e.what()).find("(1,2)") != std::string::npos);
    }
  }

  SUBCASE("partial coverage K_obs < K is rejected") {
    data.k_obs = 2;
    CHECK_THROWS_AS((void)reconstruct_semigroup(data), CoverageError);
  }

  SUBCASE("asymmetric exact data violate the contract") {
    // perturbing the (1,1) coefficient of theta^{1,2} breaks the cross-family
    // symmetry of the reconstructed matrix
    data.entries[{1, 2}](0, 0) += 1e-4;
    CHECK_THROWS_AS((void)reconstruct_semigroup(data), ContractViolation);
  }
}

TEST_CASE("reconstruct_semigroup: MC error is a small multiple of the stderr scale") {
  const Basis basis(1, 3);
  const QSpec q = QSpec::from_power(0.5, 2.0, 3);
  const double t0 = 0.1;
  const ThetaDataset data = mc_dataset(basis, q, t0, 2000, 314159);

  const SemigroupReconstruction rec = reconstruct_semigroup(data);
  const Eigen::MatrixXd reference =
      semigroup_matrix(decompose(Generator::assemble(basis, q).matrix()), t0);

  double max_stderr = 0.0;
  for (const auto& [key, se] : data.std_errors)
    max_stderr = std::max(max_stderr, se.maxCoeff());
  const double c = (rec.m_rec - reference).norm() / max_stderr;
  CHECK(c > 0.0);
  CHECK(c < 20.0);  // Frobenius over 21 entries, so a one-digit multiple
  CHECK(rec.variance.maxCoeff() > 0.0);
}

TEST_CASE("recover_generator") {
  const Basis basis(1, 6);
  const double t0 = 0.1;

  SUBCASE("zero noise leaves nothing after subtracting A0") {
    const QSpec zero = QSpec::from_list(std::vector<double>(6, 0.0));
    const SemigroupReconstruction rec =
        reconstruct_semigroup(exact_dataset(basis, zero, t0));
    const RecoveredGenerator gen = recover_generator(rec.m_rec, basis, t0, -1.0);
    CHECK(gen.hq_rec.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(gen.dropped.empty());
  }

  SUBCASE("exact round trip at K=6") {
    const QSpec q = QSpec::from_power(0.5, 2.0, 6);
    const Generator truth = Generator::assemble(basis, q);
    const SemigroupReconstruction rec = reconstruct_semigroup(exact_dataset(basis, q, t0));
    const RecoveredGenerator gen = recover_generator(rec.m_rec, basis, t0, -1.0);
    CHECK((gen.hq_rec - truth.hq()).norm() / truth.hq().norm() < 1e-6);
    CHECK(gen.recovered_rank == truth.size());
  }

  SUBCASE("floor produces an explicit null-subspace report") {
    const QSpec q = QSpec::from_power(0.5, 2.0, 6);
    const SemigroupReconstruction rec = reconstruct_semigroup(exact_dataset(basis, q, t0));
    // raise the floor above the most-decayed modes
    const RecoveredGenerator gen = recover_generator(rec.m_rec, basis, t0, 1e-3);
    CHECK(gen.recovered_rank < Generator::assemble(basis, q).size());
    CHECK(!gen.dropped.empty());
    CHECK(gen.recovered_rank + static_cast<int>(gen.dropped.size()) ==
          SymIndex::size(6));
  }
}

TEST_CASE("pairing extractor") {
  const Basis basis(1, 8);

  SUBCASE("zero operator gives zero estimates") {
    const int n = SymIndex::size(8);
    const PairingExtraction out =
        extract_lambdas_pairing(Eigen::MatrixXd::Zero(n, n), basis);
    for (double v : out.lambda_sq) CHECK(v == 0.0);
    CHECK(out.chi_residual > 0.0);
  }

  SUBCASE("single mode: error within the reported bound, improving with K") {
    double previous_error = 1e9;
    for (int modes : {4, 8, 16}) {
      const Basis b(1, modes);
      const QSpec q = QSpec::from_list({1.0});
      const Generator gen = Generator::assemble(b, q);
      const PairingExtraction out = extract_lambdas_pairing(gen.hq(), b);
      const double error = std::abs(out.lambda_sq[0] - 1.0);
      CHECK(error <= out.error_bound[0]);
      CHECK(error <= out.chi_residual);
      CHECK(error < previous_error);
      previous_error = error;
    }
  }
}

TEST_CASE("least-squares extractor") {
  SUBCASE("exact round trip at K=6") {
    const Basis basis(1, 6);
    const QSpec q = QSpec::from_power(0.5, 2.0, 6);
    const Generator gen = Generator::assemble(basis, q);
    const LsqExtraction out = extract_lambdas_lsq(gen.hq(), basis);
    CHECK(out.residual <= 1e-10);
    for (int k = 1; k <= 6; ++k) {
      const double truth = q.lambda(k) * q.lambda(k);
      CHECK(std::abs(out.lambda_sq[k - 1] - truth) / truth < 1e-8);
    }
  }

  SUBCASE("zero operator gives zeros with zero residual") {
    const Basis basis(1, 5);
    const int n = SymIndex::size(5);
    const LsqExtraction out = extract_lambdas_lsq(Eigen::MatrixXd::Zero(n, n), basis);
    for (double v : out.lambda_sq) CHECK(v == 0.0);
    CHECK(out.residual == 0.0);
  }

  SUBCASE("nonnegativity is enforced on noisy input") {
    const Basis basis(1, 4);
    const QSpec q = QSpec::from_list({0.3, 0.0, 0.0, 0.0});
    const Generator gen = Generator::assemble(basis, q);
    Eigen::MatrixXd noisy = gen.hq();
    for (int r = 0; r < noisy.rows(); ++r)
      for (int c = r; c < noisy.cols(); ++c) {
        const double bump = 2e-3 * normal_draw(5, r, static_cast<std::uint32_t>(c));
        noisy(r, c) += bump;
        if (c != r) noisy(c, r) += bump;
      }
    const LsqExtraction out = extract_lambdas_lsq(noisy, basis);
    for (double v : out.lambda_sq) CHECK(v >= 0.0);
    CHECK(out.lambda_sq[0] == doctest::Approx(0.09).epsilon(0.2));
  }
}

TEST_CASE("invert_dataset: full pipeline") {
  SUBCASE("exact data, zero noise: everything vanishes") {
    const Basis basis(1, 4);
    const QSpec zero = QSpec::from_list(std::vector<double>(4, 0.0));
    const InversionReport report =
        invert_dataset(exact_dataset(basis, zero, 0.1), basis, -1.0);
    for (double v : report.lsq.lambda_sq) CHECK(std::abs(v) <= 1e-9);
    for (double v : report.pairing.lambda_sq) CHECK(std::abs(v) <= 1e-9);
  }

  SUBCASE("exact data, K=6 power family: 1e-6 relative recovery") {
    const Basis basis(1, 6);
    const QSpec q = QSpec::from_power(0.5, 2.0, 6);
    const InversionReport report =
        invert_dataset(exact_dataset(basis, q, 0.1), basis, -1.0);
    for (int k = 1; k <= 6; ++k) {
      const double truth = q.lambda(k) * q.lambda(k);
      CHECK(std::abs(report.lsq.lambda_sq[k - 1] - truth) / truth <= 1e-6);
    }
    CHECK(report.recovered_rank == SymIndex::size(6));
    CHECK(report.asymmetry < 1e-12);
  }

  SUBCASE("MC data at desk scale: lambda_1^2, lambda_2^2 within 3x propagated stderr") {
    const Basis basis(1, 4);
    const QSpec q = QSpec::from_power(0.5, 2.0, 4);
    const ThetaDataset data = mc_dataset(basis, q, 0.1, 20000, 20240817);
    const InversionReport report = invert_dataset(data, basis, -1.0);
    REQUIRE(report.lsq.lambda_sq_std_error.size() == 4);
    for (int k = 1; k <= 2; ++k) {
      const double truth = q.lambda(k) * q.lambda(k);
      const double sigma = report.lsq.lambda_sq_std_error[k - 1];
      CHECK(sigma > 0.0);
      CHECK(std::abs(report.lsq.lambda_sq[k - 1] - truth) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("d=2 tensorized path: exact inversion round trip") {
  const Basis basis(2, 2);  // 4 flat modes
  const QSpec q = QSpec::from_list({0.5, 0.3, 0.2, 0.1});
  const InversionReport report = invert_dataset(exact_dataset(basis, q, 0.1), basis, -1.0);
  for (int k = 1; k <= 4; ++k) {
    const double truth = q.lambda(k) * q.lambda(k);
    CHECK(std::abs(report.lsq.lambda_sq[k - 1] - truth) / truth < 1e-6);
  }
}

TEST_CASE("end_to_end config-driven pipeline and scale equivariance") {
  RunConfig config;
  config.basis.modes = 5;
  config.q.list = std::vector<double>{0.6, 0.25, 0.4, 0.15, 0.1};
  config.times.t0 = 0.1;

  const InversionReport base = end_to_end(config, ThetaSource::ode);

  RunConfig scaled = config;
  scaled.q.list = std::vector<double>{1.2, 0.5, 0.8, 0.3, 0.2};
  const InversionReport four = end_to_end(scaled, ThetaSource::ode);

  for (int k = 0; k < 5; ++k)
    CHECK(four.lsq.lambda_sq[k] ==
          doctest::Approx(4.0 * base.lsq.lambda_sq[k]).epsilon(1e-8));
}
