#include "shecov.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "generator.hpp"
#include "inversion.hpp"
#include "sde.hpp"
#include "spectral.hpp"

using namespace shecov;

struct shecov_basis {
  Basis impl;
};
struct shecov_q {
  QSpec impl;
};
struct shecov_generator {
  Generator impl;
};

namespace {

thread_local std::string g_last_error;

shecov_status fail(shecov_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Maps the C++ error taxonomy onto C status codes.
template <typename Fn>
shecov_status guarded(Fn&& fn) {
  try {
    fn();
    return SHECOV_OK;
  } catch (const DivergenceError& e) {
    return fail(SHECOV_ERR_DIVERGENCE, e.what());
  } catch (const SpectralPositivityError& e) {
    return fail(SHECOV_ERR_POSITIVITY, e.what());
  } catch (const CoverageError& e) {
    return fail(SHECOV_ERR_COVERAGE, e.what());
  } catch (const ContractViolation& e) {
    return fail(SHECOV_ERR_CONTRACT, e.what());
  } catch (const NumericalError& e) {
    return fail(SHECOV_ERR_NUMERICAL, e.what());
  } catch (const IoError& e) {
    return fail(SHECOV_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SHECOV_ERR_IO, e.what());
  } catch (const std::domain_error& e) {
    return fail(SHECOV_ERR_DOMAIN, e.what());
  } catch (const std::out_of_range& e) {
    return fail(SHECOV_ERR_INDEX, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(SHECOV_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SHECOV_ERR_NUMERICAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SHECOV_ERR_NUMERICAL, e.what());
  }
}

shecov_status require(bool ok, const char* message) {
  return ok ? SHECOV_OK : fail(SHECOV_ERR_INVALID_ARGUMENT, message);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::vector<std::pair<int, int>>> parse_pairs(const char* pairs) {
  if (!pairs || !*pairs) return std::nullopt;
  std::vector<std::pair<int, int>> out;
  const std::string text(pairs);
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find(',', begin);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(begin, end - begin);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("pairs: expected i:j entries, got '" + item + "'");
    out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    begin = end + 1;
  }
  return out;
}

void copy_matrix(const Eigen::MatrixXd& m, double* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
}

} // namespace

extern "C" {

const char* shecov_version(void) { return version_string(); }

const char* shecov_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */

shecov_status shecov_basis_create(int dim, int modes_per_axis, shecov_basis** out) {
  if (shecov_status s = require(out != nullptr, "basis_create: out is NULL")) return s;
  return guarded([&] { *out = new shecov_basis{Basis(dim, modes_per_axis)}; });
}

void shecov_basis_destroy(shecov_basis* basis) { delete basis; }

shecov_status shecov_basis_mode_count(const shecov_basis* basis, int* out) {
  if (shecov_status s = require(basis && out, "mode_count: NULL argument")) return s;
  *out = basis->impl.mode_count();
  return SHECOV_OK;
}

shecov_status shecov_basis_eigenvalue(const shecov_basis* basis, int k, double* out) {
  if (shecov_status s = require(basis && out, "eigenvalue: NULL argument")) return s;
  return guarded([&] { *out = basis->impl.eigenvalue(k); });
}

shecov_status shecov_basis_eval(const shecov_basis* basis, int k, const double* x,
                                double* out) {
  if (shecov_status s = require(basis && x && out, "eval: NULL argument")) return s;
  return guarded([&] {
    *out = basis->impl.eval(k, std::span<const double>(
                                   x, static_cast<std::size_t>(basis->impl.dim())));
  });
}

shecov_status shecov_basis_triple_product(const shecov_basis* basis, int k, int m,
                                          int i, double* out) {
  if (shecov_status s = require(basis && out, "triple_product: NULL argument")) return s;
  return guarded([&] { *out = basis->impl.triple_product(k, m, i); });
}

shecov_status shecov_basis_lp_norm(const shecov_basis* basis, int k, double p,
                                   double* out) {
  if (shecov_status s = require(basis && out, "lp_norm: NULL argument")) return s;
  return guarded([&] { *out = basis->impl.lp_norm(k, p); });
}

/* ------------------------------------------------------------------ */

shecov_status shecov_q_create_list(const double* lambdas, int count, shecov_q** out) {
  if (shecov_status s = require(out && (lambdas || count == 0), "q_create_list: NULL argument"))
    return s;
  return guarded([&] {
    *out = new shecov_q{QSpec::from_list(std::vector<double>(lambdas, lambdas + count))};
  });
}

shecov_status shecov_q_create_power(double c, double s, int truncation, shecov_q** out) {
  if (shecov_status st = require(out != nullptr, "q_create_power: out is NULL")) return st;
  return guarded([&] { *out = new shecov_q{QSpec::from_power(c, s, truncation)}; });
}

void shecov_q_destroy(shecov_q* q) { delete q; }

shecov_status shecov_q_count(const shecov_q* q, int* out) {
  if (shecov_status s = require(q && out, "q_count: NULL argument")) return s;
  *out = q->impl.count();
  return SHECOV_OK;
}

shecov_status shecov_q_lambda(const shecov_q* q, int k, double* out) {
  if (shecov_status s = require(q && out, "q_lambda: NULL argument")) return s;
  return guarded([&] { *out = q->impl.lambda(k); });
}

shecov_status shecov_lambda_gamma(const shecov_q* q, const shecov_basis* basis,
                                  double gamma, double* partial_sum,
                                  double* tail_bound) {
  if (shecov_status s = require(q && basis && partial_sum, "lambda_gamma: NULL argument"))
    return s;
  return guarded([&] {
    const LambdaGamma lg = lambda_gamma(q->impl, basis->impl, gamma);
    *partial_sum = lg.partial_sum;
    if (tail_bound)
      *tail_bound = lg.tail_bound.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

shecov_status shecov_check_wellposed(const shecov_q* q, const shecov_basis* basis,
                                     int* admissible, double* witness_gamma) {
  if (shecov_status s = require(q && basis && admissible, "check_wellposed: NULL argument"))
    return s;
  return guarded([&] {
    const WellPosedReport report = check_wellposed(q->impl, basis->impl);
    *admissible = report.admissible ? 1 : 0;
    if (witness_gamma)
      *witness_gamma =
          report.witness_gamma.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

/* ------------------------------------------------------------------ */

shecov_status shecov_generator_assemble(const shecov_basis* basis, const shecov_q* q,
                                        shecov_generator** out) {
  if (shecov_status s = require(basis && q && out, "generator_assemble: NULL argument"))
    return s;
  return guarded([&] {
    *out = new shecov_generator{Generator::assemble(basis->impl, q->impl)};
  });
}

void shecov_generator_destroy(shecov_generator* gen) { delete gen; }

shecov_status shecov_generator_size(const shecov_generator* gen, int* out) {
  if (shecov_status s = require(gen && out, "generator_size: NULL argument")) return s;
  *out = gen->impl.size();
  return SHECOV_OK;
}

shecov_status shecov_generator_matrix(const shecov_generator* gen, double* out) {
  if (shecov_status s = require(gen && out, "generator_matrix: NULL argument")) return s;
  copy_matrix(gen->impl.matrix(), out);
  return SHECOV_OK;
}

shecov_status shecov_generator_hq(const shecov_generator* gen, double* out) {
  if (shecov_status s = require(gen && out, "generator_hq: NULL argument")) return s;
  copy_matrix(gen->impl.hq(), out);
  return SHECOV_OK;
}

shecov_status shecov_evolve_theta(const shecov_generator* gen, const double* theta0,
                                  double t, double* out) {
  if (shecov_status s = require(gen && theta0 && out, "evolve_theta: NULL argument"))
    return s;
  return guarded([&] {
    const int k = gen->impl.modes();
    Eigen::MatrixXd m(k, k);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) m(r, c) = theta0[r * k + c];
    copy_matrix(evolve_theta(gen->impl, TensorField(std::move(m)), t).coeffs(), out);
  });
}

shecov_status shecov_theta_ij_exact(const shecov_generator* gen, int i, int j,
                                    double t0, double* out) {
  if (shecov_status s = require(gen && out, "theta_ij_exact: NULL argument")) return s;
  return guarded([&] { copy_matrix(theta_ij_exact(gen->impl, i, j, t0).coeffs(), out); });
}

shecov_status shecov_hq_norm_check(const shecov_basis* basis, const shecov_q* q,
                                   double gamma1, double gamma2,
                                   double* operator_norm, double* bound) {
  if (shecov_status s =
          require(basis && q && operator_norm && bound, "hq_norm_check: NULL argument"))
    return s;
  return guarded([&] {
    const HqNormCheck check = hq_norm_check(basis->impl, q->impl, gamma1, gamma2);
    *operator_norm = check.operator_norm;
    *bound = check.bound;
  });
}

/* ------------------------------------------------------------------ */

shecov_status shecov_spectral_log(const double* m, int n, double t0, double floor,
                                  double* l_rec, int* recovered_rank) {
  if (shecov_status s = require(m && l_rec && n > 0, "spectral_log: bad arguments"))
    return s;
  return guarded([&] {
    Eigen::MatrixXd matrix(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) matrix(r, c) = m[r * n + c];
    const SpectralLogResult result = spectral_log(matrix, t0, floor);
    copy_matrix(result.l_rec, l_rec);
    if (recovered_rank) *recovered_rank = result.recovered_rank;
  });
}

shecov_status shecov_trotter_errors(const shecov_basis* basis, const shecov_q* q,
                                    double t, const int* step_counts, int count,
                                    double* errors) {
  if (shecov_status s = require(basis && q && step_counts && errors && count > 0,
                                "trotter_errors: bad arguments"))
    return s;
  return guarded([&] {
    const auto rows = trotter_check(basis->impl, q->impl, t,
                                    std::span<const int>(step_counts, count));
    for (int i = 0; i < count; ++i) errors[i] = rows[i].error;
  });
}

/* ------------------------------------------------------------------ */

shecov_status shecov_simulate_path(const shecov_basis* basis, const shecov_q* q,
                                   const double* u0, double t,
                                   const char* scheme_kind, double dt,
                                   uint64_t path_seed, double* u_out,
                                   const char* trajectory_csv_path) {
  if (shecov_status s = require(basis && q && u0 && scheme_kind && u_out,
                                "simulate_path: NULL argument"))
    return s;
  return guarded([&] {
    const int k = basis->impl.mode_count();
    const SdeScheme scheme{scheme_kind_from_string(scheme_kind), dt};
    Eigen::VectorXd start(k);
    for (int i = 0; i < k; ++i) start(i) = u0[i];
    Trajectory trajectory;
    const Eigen::VectorXd final_state =
        simulate_path(start, t, basis->impl, q->impl, scheme, path_seed,
                      trajectory_csv_path ? &trajectory : nullptr);
    for (int i = 0; i < k; ++i) u_out[i] = final_state(i);
    if (trajectory_csv_path) {
      std::ofstream out(trajectory_csv_path);
      if (!out) throw IoError(std::string("cannot open '") + trajectory_csv_path + "'");
      out << "step,t";
      for (int i = 1; i <= k; ++i) out << ",u_" << i;
      out << '\n';
      for (std::size_t s = 0; s < trajectory.times.size(); ++s) {
        out << s << ',' << format_double(trajectory.times[s]);
        for (int i = 0; i < k; ++i) out << ',' << format_double(trajectory.states[s](i));
        out << '\n';
      }
    }
  });
}

shecov_status shecov_mc_theta(const shecov_basis* basis, const shecov_q* q,
                              const double* u0, double t, const char* scheme_kind,
                              double dt, int64_t paths, uint64_t master_seed,
                              double* theta_out, double* stderr_out) {
  if (shecov_status s =
          require(basis && q && u0 && scheme_kind && theta_out, "mc_theta: NULL argument"))
    return s;
  return guarded([&] {
    const int k = basis->impl.mode_count();
    Eigen::VectorXd start(k);
    for (int i = 0; i < k; ++i) start(i) = u0[i];
    const MCEnsemble ensemble{paths, master_seed,
                              {scheme_kind_from_string(scheme_kind), dt}, 0};
    const ThetaEstimate est = mc_theta(start, t, basis->impl, q->impl, ensemble);
    copy_matrix(est.theta, theta_out);
    if (stderr_out) copy_matrix(est.std_error, stderr_out);
  });
}

shecov_status shecov_mc_theta_ij(const shecov_basis* basis, const shecov_q* q, int i,
                                 int j, double t, const char* scheme_kind, double dt,
                                 int64_t paths, uint64_t master_seed,
                                 double* theta_out, double* stderr_out) {
  if (shecov_status s =
          require(basis && q && scheme_kind && theta_out, "mc_theta_ij: NULL argument"))
    return s;
  return guarded([&] {
    const MCEnsemble ensemble{paths, master_seed,
                              {scheme_kind_from_string(scheme_kind), dt}, 0};
    const ThetaEstimate est = mc_theta_ij(i, j, t, basis->impl, q->impl, ensemble);
    copy_matrix(est.theta, theta_out);
    if (stderr_out) copy_matrix(est.std_error, stderr_out);
  });
}

/* ------------------------------------------------------------------ */

shecov_status shecov_cmd_basis(const char* config_json, const char* out_dir) {
  if (shecov_status s = require(config_json && out_dir, "cmd_basis: NULL argument"))
    return s;
  return guarded([&] { cmd_basis(parse_config_text(config_json), out_dir); });
}

shecov_status shecov_cmd_theta(const char* config_json, const char* out_dir,
                               const char* source, const char* pairs) {
  if (shecov_status s =
          require(config_json && out_dir && source, "cmd_theta: NULL argument"))
    return s;
  return guarded([&] {
    cmd_theta(parse_config_text(config_json), out_dir, theta_source_from_string(source),
              parse_pairs(pairs));
  });
}

shecov_status shecov_cmd_invert(const char* config_json, const char* dataset_dir,
                                const char* out_dir, char** report_json) {
  if (shecov_status s = require(config_json && dataset_dir && out_dir,
                                "cmd_invert: NULL argument"))
    return s;
  return guarded([&] {
    const RunConfig config = parse_config_text(config_json);
    const InversionReport report = cmd_invert(config, dataset_dir, out_dir);
    if (report_json)
      *report_json = copy_string(inversion_report_json(report, config).dump(2));
  });
}

shecov_status shecov_cmd_verify(const char* config_json, const char* out_dir,
                                int corrupt_triple_tensor, char** summary_json,
                                int* all_passed_out) {
  if (shecov_status s = require(config_json != nullptr, "cmd_verify: NULL argument"))
    return s;
  bool ok = false;
  const shecov_status status = guarded([&] {
    VerifyOptions options;
    options.corrupt_triple_tensor = corrupt_triple_tensor != 0;
    const auto results =
        cmd_verify(parse_config_text(config_json),
                   out_dir ? std::optional<std::filesystem::path>(out_dir) : std::nullopt,
                   options);
    ok = all_passed(results);
    if (summary_json)
      *summary_json = copy_string(
          nlohmann::json{{"all_passed", ok}, {"properties", properties_json(results)}}
              .dump(2));
  });
  if (status != SHECOV_OK) return status;
  if (all_passed_out) *all_passed_out = ok ? 1 : 0;
  if (!ok) return fail(SHECOV_ERR_PROPERTY, "verify: at least one property failed");
  return SHECOV_OK;
}

shecov_status shecov_cmd_converge(const char* config_json, const char* out_dir,
                                  const char* sweep_kind, const double* values,
                                  int count) {
  if (shecov_status s = require(config_json && out_dir && sweep_kind && values && count > 0,
                                "cmd_converge: bad arguments"))
    return s;
  return guarded([&] {
    SweepSpec sweep{sweep_kind, std::vector<double>(values, values + count)};
    cmd_converge(parse_config_text(config_json), out_dir, sweep);
  });
}

shecov_status shecov_config_default(char** config_json) {
  if (shecov_status s = require(config_json != nullptr, "config_default: out is NULL"))
    return s;
  return guarded([&] { *config_json = copy_string(echo_config(RunConfig{}).dump(2)); });
}

void shecov_string_free(char* s) { std::free(s); }

} // extern "C"
