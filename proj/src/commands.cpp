#include "commands.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dataset.hpp"
#include "errors.hpp"
#include "generator.hpp"
#include "rng.hpp"
#include "sde.hpp"
#include "spectral.hpp"

namespace shecov {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// FNV-1a over the IEEE-754 bytes of every tensor entry in index order.
std::string triple_tensor_checksum(const Basis& basis) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&](double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  };
  for (double v : basis.triple_table_1d()) mix(v);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t pair_master_seed(std::uint64_t master_seed, int i, int j) {
  return derive_substream_seed(master_seed, 1, SymIndex::pos(i, j));
}

} // namespace

std::string cmd_basis(const RunConfig& config, const fs::path& out_dir) {
  const Basis basis = make_basis(config);
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "eigenvalues.csv");
    if (!out) throw IoError("cannot open '" + (out_dir / "eigenvalues.csv").string() + "'");
    out << "k,alpha_k\n";
    for (int k = 1; k <= basis.mode_count(); ++k)
      out << k << ',' << format_double(basis.eigenvalue(k)) << '\n';
    if (!out) throw IoError("failed writing eigenvalue table");
  }

  const std::string checksum = triple_tensor_checksum(basis);
  write_json(out_dir / "triple_checksum.json",
             json{{"schema", "shecov.checksum/1"},
                  {"dim", basis.dim()},
                  {"K", basis.modes_per_axis()},
                  {"fnv1a64", checksum}});
  write_manifest(out_dir, "basis", config);
  return checksum;
}

ThetaSource theta_source_from_string(const std::string& s) {
  if (s == "ode") return ThetaSource::ode;
  if (s == "mc") return ThetaSource::mc;
  throw std::invalid_argument("source must be 'mc' or 'ode', got '" + s + "'");
}

ThetaDataset generate_theta_dataset(
    const RunConfig& config, ThetaSource source,
    const std::optional<std::vector<std::pair<int, int>>>& pairs) {
  const Basis basis = make_basis(config);
  const QSpec q = make_qspec(config);
  const int k_obs = config.k_obs_effective();
  if (k_obs > basis.mode_count())
    throw std::invalid_argument("K_obs exceeds the basis truncation");

  std::vector<std::pair<int, int>> wanted;
  if (pairs) {
    for (auto [i, j] : *pairs) {
      if (i < 1 || j < 1 || i > basis.mode_count() || j > basis.mode_count())
        throw std::out_of_range("pair (" + std::to_string(i) + "," + std::to_string(j) +
                                ") outside the truncation");
      if (i > j) std::swap(i, j);
      wanted.emplace_back(i, j);
    }
  } else {
    for (int j = 1; j <= k_obs; ++j)
      for (int i = 1; i <= j; ++i) wanted.emplace_back(i, j);
  }

  ThetaDataset data;
  data.t0 = config.times.t0;
  data.dim = basis.dim();
  data.modes = basis.mode_count();
  data.k_obs = k_obs;
  data.provenance = source == ThetaSource::ode ? ThetaDataset::Provenance::exact
                                               : ThetaDataset::Provenance::monte_carlo;

  if (source == ThetaSource::ode) {
    const Generator gen = Generator::assemble(basis, q);
    const SpectralDecomposition dec = decompose(gen.matrix());
    for (auto [i, j] : wanted)
      data.entries[{i, j}] = theta_ij_exact(dec, basis.mode_count(), i, j, data.t0).coeffs();
  } else {
    data.mc_paths = config.mc.paths;
    data.mc_master_seed = config.mc.master_seed;
    for (auto [i, j] : wanted) {
      MCEnsemble ensemble{config.mc.paths,
                          pair_master_seed(config.mc.master_seed, i, j),
                          {config.scheme.kind, config.scheme.dt},
                          config.mc.threads};
      try {
        const ThetaEstimate est = mc_theta_ij(i, j, data.t0, basis, q, ensemble);
        data.entries[{i, j}] = est.theta;
        data.std_errors[{i, j}] = est.std_error;
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.step(), e.path(), e.path_seed(),
                              "while generating pair (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
      }
    }
  }
  return data;
}

ThetaDataset cmd_theta(const RunConfig& config, const fs::path& out_dir,
                       ThetaSource source,
                       const std::optional<std::vector<std::pair<int, int>>>& pairs) {
  const ThetaDataset data = generate_theta_dataset(config, source, pairs);
  fs::create_directories(out_dir);

  if (source == ThetaSource::ode) {
    // spectrum of the tensor-space generator used for the evolution
    const Basis basis = make_basis(config);
    const SpectralDecomposition dec =
        decompose(Generator::assemble(basis, make_qspec(config)).matrix());
    std::ofstream out(out_dir / "spectrum.csv");
    if (!out) throw IoError("cannot open '" + (out_dir / "spectrum.csv").string() + "'");
    out << "index,sigma,multiplicity_group\n";
    for (std::size_t g = 0; g < dec.clusters.size(); ++g)
      for (int k = dec.clusters[g].first; k < dec.clusters[g].second; ++k)
        out << k << ',' << format_double(dec.sigmas(k)) << ',' << g << '\n';
  }

  json ensemble;
  if (source == ThetaSource::mc)
    ensemble = json{{"master_seed", config.mc.master_seed},
                    {"M", config.mc.paths},
                    {"dt", config.scheme.dt},
                    {"scheme", to_string(config.scheme.kind)},
                    {"K", config.basis.modes},
                    {"lambda_spec", lambda_spec_json(config)},
                    {"u0", "e_i + e_j and e_i - e_j per pair, common random numbers"},
                    {"t", config.times.t0},
                    {"pair_seed_rule", "substream(master_seed, 1, sym_pos(i,j))"}};
  write_theta_dataset(out_dir, data, lambda_spec_json(config), ensemble);
  write_manifest(out_dir, "theta", config,
                 json{{"source", source == ThetaSource::ode ? "ode" : "mc"}});
  return data;
}

json inversion_report_json(const InversionReport& report, const RunConfig& config) {
  json lsq_stderr = json::array();
  for (double v : report.lsq.lambda_sq_std_error) lsq_stderr.push_back(v);
  json j{{"schema", "shecov.inversion_report/1"},
         {"config", echo_config(config)},
         {"K", report.modes},
         {"t0", report.t0},
         {"lambda_sq_pairing", report.pairing.lambda_sq},
         {"pairing_chi_residual", report.pairing.chi_residual},
         {"pairing_error_bound", report.pairing.error_bound},
         {"lambda_sq_lsq", report.lsq.lambda_sq},
         {"lsq_residual", report.lsq.residual},
         {"recovered_rank", report.recovered_rank},
         {"dropped_modes", report.dropped},
         {"floor", report.floor_used},
         {"asymmetry_diag", report.asymmetry},
         {"timings_ms",
          {{"reconstruct", report.ms_reconstruct},
           {"recover", report.ms_recover},
           {"extract", report.ms_extract}}}};
  if (!lsq_stderr.empty()) j["lambda_sq_lsq_stderr"] = lsq_stderr;
  return j;
}

InversionReport cmd_invert(const RunConfig& config, const fs::path& dataset_dir,
                           const fs::path& out_dir) {
  const ThetaDataset data = read_theta_dataset(dataset_dir);
  const int per_axis = data.dim == 1
                           ? data.modes
                           : static_cast<int>(std::lround(std::sqrt(data.modes)));
  const Basis basis(data.dim, per_axis);
  const InversionReport report = invert_dataset(data, basis, config.inversion.floor);

  fs::create_directories(out_dir);
  write_json(out_dir / "report.json", inversion_report_json(report, config));
  write_manifest(out_dir, "invert", config,
                 json{{"dataset", dataset_dir.string()}});
  return report;
}

std::vector<PropertyResult> cmd_verify(const RunConfig& config,
                                       const std::optional<fs::path>& out_dir,
                                       const VerifyOptions& options) {
  const std::vector<PropertyResult> results = run_property_suite(config, options);
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_json(*out_dir / "verify.json",
               json{{"schema", "shecov.verify/1"},
                    {"all_passed", all_passed(results)},
                    {"properties", properties_json(results)}});
    write_manifest(*out_dir, "verify", config);
  }
  return results;
}

InversionReport end_to_end(const RunConfig& config, ThetaSource source) {
  const Basis basis = make_basis(config);
  const ThetaDataset data = generate_theta_dataset(config, source);
  return invert_dataset(data, basis, config.inversion.floor);
}

namespace {

double max_rel_lambda_error(const RunConfig& config, const InversionReport& report) {
  const QSpec q = make_qspec(config);
  double worst = 0.0;
  for (int k = 1; k <= report.modes; ++k) {
    const double truth = q.lambda(k) * q.lambda(k);
    const double got = report.lsq.lambda_sq[k - 1];
    worst = std::max(worst, truth > 0.0 ? std::abs(got - truth) / truth
                                        : std::abs(got));
  }
  return worst;
}

} // namespace

std::vector<ConvergeRow> cmd_converge(const RunConfig& config, const fs::path& out_dir,
                                      const SweepSpec& sweep) {
  if (sweep.values.empty())
    throw std::invalid_argument("converge: sweep must list at least one value");

  const Basis basis = make_basis(config);
  const QSpec q = make_qspec(config);

  std::vector<ConvergeRow> rows;

  if (sweep.kind == "dt" || sweep.kind == "M") {
    // Forward reference: the exact matrix-exponential evolution of u0 = e1+e2.
    const Generator gen = Generator::assemble(basis, q);
    const SpectralDecomposition dec = decompose(gen.matrix());
    Eigen::VectorXd u0 = unit_field(basis.mode_count(), 1);
    if (basis.mode_count() >= 2) u0 += unit_field(basis.mode_count(), 2);
    const Eigen::MatrixXd reference =
        evolve_theta(dec, TensorField(Eigen::MatrixXd(u0 * u0.transpose())),
                     config.times.t0)
            .coeffs();

    for (double value : sweep.values) {
      RunConfig local = config;
      if (sweep.kind == "dt")
        local.scheme.dt = value;
      else
        local.mc.paths = static_cast<std::int64_t>(value);
      MCEnsemble ensemble{local.mc.paths, local.mc.master_seed,
                          {local.scheme.kind, local.scheme.dt}, local.mc.threads};
      const ThetaEstimate est = mc_theta(u0, local.times.t0, basis, q, ensemble);

      ConvergeRow row;
      row.value = value;
      row.forward_error = (est.theta - reference).cwiseAbs().maxCoeff();
      row.mean_stderr = est.std_error.mean();
      const InversionReport report = end_to_end(local, ThetaSource::mc);
      row.inversion_error = max_rel_lambda_error(local, report);
      row.recovered_rank = report.recovered_rank;
      rows.push_back(row);
    }
  } else if (sweep.kind == "K") {
    for (double value : sweep.values) {
      RunConfig local = config;
      local.basis.modes = static_cast<int>(value);
      local.inversion.k_obs = 0;
      const InversionReport report = end_to_end(local, ThetaSource::ode);
      ConvergeRow row;
      row.value = value;
      row.inversion_error = max_rel_lambda_error(local, report);
      const QSpec local_q = make_qspec(local);
      const double truth1 = local_q.lambda(1) * local_q.lambda(1);
      row.pairing_error_1 = truth1 > 0.0
                                ? std::abs(report.pairing.lambda_sq[0] - truth1) / truth1
                                : std::abs(report.pairing.lambda_sq[0]);
      row.recovered_rank = report.recovered_rank;
      rows.push_back(row);
    }
  } else if (sweep.kind == "t0") {
    for (double value : sweep.values) {
      RunConfig local = config;
      local.times.t0 = value;
      const InversionReport report = end_to_end(local, ThetaSource::ode);
      ConvergeRow row;
      row.value = value;
      row.inversion_error = max_rel_lambda_error(local, report);
      row.recovered_rank = report.recovered_rank;
      rows.push_back(row);
    }
  } else {
    throw std::invalid_argument("converge: sweep kind must be dt, K, M or t0");
  }

  fs::create_directories(out_dir);
  const fs::path csv = out_dir / ("converge_" + sweep.kind + ".csv");
  {
    std::ofstream out(csv);
    if (!out) throw IoError("cannot open '" + csv.string() + "'");
    out << "sweep,value,forward_error,mean_stderr,inversion_error,pairing_error_1,"
           "recovered_rank\n";
    for (const auto& row : rows) {
      out << sweep.kind << ',' << format_double(row.value) << ','
          << (std::isnan(row.forward_error) ? "" : format_double(row.forward_error)) << ','
          << (std::isnan(row.mean_stderr) ? "" : format_double(row.mean_stderr)) << ','
          << (std::isnan(row.inversion_error) ? "" : format_double(row.inversion_error))
          << ','
          << (std::isnan(row.pairing_error_1) ? "" : format_double(row.pairing_error_1))
          << ',' << (row.recovered_rank < 0 ? "" : std::to_string(row.recovered_rank))
          << '\n';
    }
  }
  json values = json::array();
  for (double v : sweep.values) values.push_back(v);
  write_manifest(out_dir, "converge", config,
                 json{{"sweep", sweep.kind}, {"values", values}});
  return rows;
}

} // namespace shecov
