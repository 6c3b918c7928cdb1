#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "rng.hpp"
#include "shecov.h"

using namespace shecov;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("shecov_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHECOV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WEXITSTATUS(raw);
}

} // namespace

TEST_CASE("config: defaults, strict keys, echo stability") {
  const RunConfig defaults = parse_config_text("{}");
  CHECK(defaults.basis.dim == 1);
  CHECK(defaults.basis.modes == 8);
  CHECK(defaults.scheme.kind == SchemeKind::exponential_euler);
  CHECK(defaults.scheme.dt == 1e-3);
  CHECK(defaults.mc.paths == 20000);
  CHECK(defaults.times.t0 == 0.1);
  CHECK(defaults.inversion.floor == -1.0);

  CHECK_THROWS_AS(parse_config_text("{\"basis\":{\"k\":4}}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"Q\":{}}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"scheme\":{\"kind\":\"milstein\"}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"scheme\":{\"dt\":0}}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"q\":{\"list\":[0.1],\"c\":0.5}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"q\":{\"family\":\"exp\"}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"inversion\":{\"floor\":\"tiny\"}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("{\"inversion\":{\"floor\":-2}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("not json"), std::invalid_argument);

  // floor accepts "auto" and numbers
  CHECK(parse_config_text("{\"inversion\":{\"floor\":\"auto\"}}").inversion.floor == -1.0);
  CHECK(parse_config_text("{\"inversion\":{\"floor\":1e-10}}").inversion.floor == 1e-10);

  // echo is stable under parse -> echo -> parse
  const std::string text =
      "{\"basis\":{\"K\":6},\"q\":{\"family\":\"power\",\"c\":0.5,\"s\":2.0},"
      "\"mc\":{\"master_seed\":12345}}";
  const auto echo1 = echo_config(parse_config_text(text)).dump();
  const auto echo2 = echo_config(parse_config_text(echo1)).dump();
  CHECK(echo1 == echo2);
}

TEST_CASE("matrix CSV round trip is lossless at 17 significant digits") {
  const fs::path dir = temp_dir("csv");
  Eigen::MatrixXd m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m(i, j) = normal_draw(1234, i, static_cast<std::uint32_t>(j)) * 1e-7;
  write_matrix_csv(dir / "m.csv", m);
  const Eigen::MatrixXd back = read_matrix_csv(dir / "m.csv");
  CHECK(back == m);
}

TEST_CASE("dataset write/read round trip") {
  const fs::path dir = temp_dir("dataset");
  RunConfig config;
  config.basis.modes = 3;
  config.mc.paths = 50;
  config.mc.master_seed = 99;

  const ThetaDataset written = cmd_theta(config, dir, ThetaSource::mc);
  const ThetaDataset back = read_theta_dataset(dir);
  CHECK(back.t0 == written.t0);
  CHECK(back.modes == 3);
  CHECK(back.k_obs == 3);
  CHECK(back.provenance == ThetaDataset::Provenance::monte_carlo);
  CHECK(back.mc_paths == 50);
  CHECK(back.mc_master_seed == 99);
  REQUIRE(back.entries.size() == 6);
  for (const auto& [key, matrix] : written.entries) {
    CHECK(back.entries.at(key) == matrix);             // bit-exact through CSV
    CHECK(back.std_errors.at(key) == written.std_errors.at(key));
  }

  // manifest carries schema, version, and the full config echo
  const auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest.at("schema") == kManifestSchema);
  CHECK(manifest.at("command") == "theta");
  CHECK(manifest.at("config").at("mc").at("master_seed") == 99);
  CHECK(manifest.at("version") == version_string());

  const auto index = read_json(dir / "index.json");
  CHECK(index.at("schema") == kDatasetSchema);
  CHECK(index.at("ensemble").at("M") == 50);
}

TEST_CASE("MC rerun with the same manifest is bit-identical on disk") {
  RunConfig config;
  config.basis.modes = 3;
  config.mc.paths = 60;
  config.mc.master_seed = 4242;

  const fs::path a = temp_dir("repro_a");
  const fs::path b = temp_dir("repro_b");
  cmd_theta(config, a, ThetaSource::mc);
  cmd_theta(config, b, ThetaSource::mc);
  for (int j = 1; j <= 3; ++j)
    for (int i = 1; i <= j; ++i) {
      const std::string name =
          "theta_" + std::to_string(i) + "_" + std::to_string(j) + ".csv";
      CHECK(slurp(a / name) == slurp(b / name));
      CHECK(!slurp(a / name).empty());
    }
  CHECK(slurp(a / "index.json") == slurp(b / "index.json"));
}

TEST_CASE("cmd_basis writes the eigenvalue table and a stable checksum") {
  RunConfig config;
  config.basis.modes = 4;
  const fs::path dir = temp_dir("basis");
  const std::string checksum = cmd_basis(config, dir);
  CHECK(cmd_basis(config, temp_dir("basis2")) == checksum);

  std::ifstream in(dir / "eigenvalues.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,alpha_k");
  std::getline(in, line);
  CHECK(line == "1,1");
  std::getline(in, line);
  CHECK(line == "2,4");

  // pinned after the first verified build; guards the tensor bit-for-bit
  RunConfig pinned;
  pinned.basis.modes = 8;
  CHECK(cmd_basis(pinned, temp_dir("basis8")) == "1dbda7865ef9d870");
}

TEST_CASE("cmd_theta: zero-noise ODE dataset carries the analytic decay") {
  RunConfig config;
  config.basis.modes = 3;
  config.q.list = std::vector<double>{0.0, 0.0, 0.0};
  config.times.t0 = 0.1;
  const fs::path dir = temp_dir("theta_ode_zero");
  cmd_theta(config, dir, ThetaSource::ode);
  const Eigen::MatrixXd theta11 = read_matrix_csv(dir / "theta_1_1.csv");
  CHECK(theta11(0, 0) == doctest::Approx(4.0 * std::exp(-0.2)).epsilon(1e-12));
  CHECK(theta11.cwiseAbs().sum() == doctest::Approx(4.0 * std::exp(-0.2)).epsilon(1e-12));

  // spectrum dump: one row per tensor mode, heat eigenvalues -(alpha_i+alpha_j)
  std::ifstream spectrum(dir / "spectrum.csv");
  std::string line;
  std::getline(spectrum, line);
  CHECK(line == "index,sigma,multiplicity_group");
  std::getline(spectrum, line);
  CHECK(line == "0,-2,0");
  int rows = 0;
  while (std::getline(spectrum, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);  // N = 6 for K = 3
}

TEST_CASE("cmd_theta: mc and ode sources agree within 3 stderr") {
  RunConfig config;
  config.basis.modes = 3;
  config.mc.paths = 2000;
  config.mc.master_seed = 42;
  const ThetaDataset mc = generate_theta_dataset(config, ThetaSource::mc);
  const ThetaDataset ode = generate_theta_dataset(config, ThetaSource::ode);

  int inside = 0, total = 0;
  for (const auto& [key, mc_matrix] : mc.entries) {
    const Eigen::MatrixXd& exact = ode.entries.at(key);
    const Eigen::MatrixXd& se = mc.std_errors.at(key);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        ++total;
        if (std::abs(mc_matrix(i, j) - exact(i, j)) <= 3.0 * se(i, j) + 1e-12) ++inside;
      }
  }
  CHECK(static_cast<double>(inside) / total >= 0.99);
}

TEST_CASE("cmd_converge: dt and K sweeps") {
  RunConfig config;
  config.basis.modes = 3;
  config.mc.paths = 300;
  config.mc.master_seed = 11;

  const auto dt_rows = cmd_converge(config, temp_dir("conv_dt"), {"dt", {4e-3, 1e-3}});
  REQUIRE(dt_rows.size() == 2);
  for (const auto& row : dt_rows) {
    CHECK(row.forward_error >= 0.0);
    CHECK(row.mean_stderr > 0.0);
  }

  const auto k_rows = cmd_converge(config, temp_dir("conv_k"), {"K", {4, 8}});
  REQUIRE(k_rows.size() == 2);
  CHECK(k_rows[0].inversion_error < 1e-6);  // exact data: lsq is K-independent
  CHECK(k_rows[1].inversion_error < 1e-6);
  CHECK(k_rows[1].pairing_error_1 < k_rows[0].pairing_error_1);  // Gibbs refinement

  const auto m_rows = cmd_converge(config, temp_dir("conv_m"), {"M", {100, 400}});
  REQUIRE(m_rows.size() == 2);
  // quadrupling the ensemble halves the mean stderr
  CHECK(m_rows[0].mean_stderr / m_rows[1].mean_stderr ==
        doctest::Approx(2.0).epsilon(0.25));

  CHECK_THROWS_AS(cmd_converge(config, temp_dir("conv_bad"), {"foo", {1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cmd_converge(config, temp_dir("conv_empty"), {"dt", {}}),
                  std::invalid_argument);
}

TEST_CASE("cmd_converge: t0 sweep reports non-increasing recovered rank") {
  RunConfig config;
  config.basis.modes = 4;
  const SweepSpec sweep{"t0", {0.1, 0.8, 1.6}};
  const auto rows = cmd_converge(config, temp_dir("conv"), sweep);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].recovered_rank >= rows[1].recovered_rank);
  CHECK(rows[1].recovered_rank >= rows[2].recovered_rank);
  CHECK(rows[0].inversion_error < 1e-6);
}

TEST_CASE("C API: basis, q, generator and spectral entry points") {
  shecov_basis* basis = nullptr;
  REQUIRE(shecov_basis_create(1, 4, &basis) == SHECOV_OK);
  int count = 0;
  CHECK(shecov_basis_mode_count(basis, &count) == SHECOV_OK);
  CHECK(count == 4);

  double value = 0.0;
  CHECK(shecov_basis_eigenvalue(basis, 3, &value) == SHECOV_OK);
  CHECK(value == 9.0);
  CHECK(shecov_basis_eigenvalue(basis, 9, &value) == SHECOV_ERR_INDEX);
  CHECK(std::string(shecov_last_error()).find("index") != std::string::npos);

  const double outside[1] = {-1.0};
  CHECK(shecov_basis_eval(basis, 1, outside, &value) == SHECOV_ERR_DOMAIN);
  CHECK(shecov_basis_lp_norm(basis, 1, 0.5, &value) == SHECOV_ERR_INVALID_ARGUMENT);
  CHECK(shecov_basis_triple_product(basis, 1, 1, 2, &value) == SHECOV_OK);
  CHECK(value == 0.0);

  shecov_q* q = nullptr;
  REQUIRE(shecov_q_create_power(0.5, 2.0, 4, &q) == SHECOV_OK);
  double partial = 0.0, tail = 0.0;
  CHECK(shecov_lambda_gamma(q, basis, 0.0, &partial, &tail) == SHECOV_OK);
  CHECK(partial > 0.0);
  CHECK(tail > 0.0);
  int admissible = 0;
  double witness = -1.0;
  CHECK(shecov_check_wellposed(q, basis, &admissible, &witness) == SHECOV_OK);
  CHECK(admissible == 1);
  CHECK(witness == 0.0);

  shecov_generator* gen = nullptr;
  REQUIRE(shecov_generator_assemble(basis, q, &gen) == SHECOV_OK);
  int n = 0;
  CHECK(shecov_generator_size(gen, &n) == SHECOV_OK);
  CHECK(n == 10);

  // evolve theta through the C surface and check heat decay of e1 (x) e1
  shecov_q* zero = nullptr;
  const double zeros[4] = {0.0, 0.0, 0.0, 0.0};
  REQUIRE(shecov_q_create_list(zeros, 4, &zero) == SHECOV_OK);
  shecov_generator* heat = nullptr;
  REQUIRE(shecov_generator_assemble(basis, zero, &heat) == SHECOV_OK);
  double theta0[16] = {0.0};
  theta0[0] = 1.0;
  double theta_t[16] = {0.0};
  REQUIRE(shecov_evolve_theta(heat, theta0, 0.3, theta_t) == SHECOV_OK);
  CHECK(theta_t[0] == doctest::Approx(std::exp(-0.6)).epsilon(1e-12));

  double theta11[16];
  REQUIRE(shecov_theta_ij_exact(heat, 1, 1, 0.1, theta11) == SHECOV_OK);
  CHECK(theta11[0] == doctest::Approx(4.0 * std::exp(-0.2)).epsilon(1e-12));

  // spectral log through the C surface: the identity maps to zero
  double l_mat[100], l_rec[100], m_rec[100];
  REQUIRE(shecov_generator_matrix(gen, l_mat) == SHECOV_OK);
  for (int i = 0; i < 100; ++i) m_rec[i] = (i % 11 == 0) ? 1.0 : 0.0;
  int rank = 0;
  REQUIRE(shecov_spectral_log(m_rec, 10, 1.0, 0.0, l_rec, &rank) == SHECOV_OK);
  CHECK(rank == 10);
  double max_abs = 0.0;
  for (double v : l_rec) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs < 1e-14);

  double norm = 0.0, bound = 0.0;
  CHECK(shecov_hq_norm_check(basis, q, 0.0, 0.0, &norm, &bound) == SHECOV_OK);
  CHECK(norm <= bound);

  shecov_generator_destroy(heat);
  shecov_generator_destroy(gen);
  shecov_q_destroy(zero);
  shecov_q_destroy(q);
  shecov_basis_destroy(basis);
}

TEST_CASE("C API: Monte Carlo determinism and divergence status") {
  shecov_basis* basis = nullptr;
  REQUIRE(shecov_basis_create(1, 3, &basis) == SHECOV_OK);
  shecov_q* q = nullptr;
  REQUIRE(shecov_q_create_power(0.5, 2.0, 3, &q) == SHECOV_OK);

  double u0[3] = {1.0, 0.0, 0.0};
  double theta_a[9], theta_b[9], se[9];
  REQUIRE(shecov_mc_theta(basis, q, u0, 0.05, "exponential_euler", 1e-3, 200, 7,
                          theta_a, se) == SHECOV_OK);
  REQUIRE(shecov_mc_theta(basis, q, u0, 0.05, "exponential_euler", 1e-3, 200, 7,
                          theta_b, nullptr) == SHECOV_OK);
  for (int i = 0; i < 9; ++i) CHECK(theta_a[i] == theta_b[i]);

  double out[9];
  CHECK(shecov_mc_theta_ij(basis, q, 1, 2, 0.05, "exponential_euler", 1e-3, 100, 7, out,
                           nullptr) == SHECOV_OK);
  CHECK(shecov_mc_theta(basis, q, u0, 0.05, "heun", 1e-3, 100, 7, out, nullptr) ==
        SHECOV_ERR_INVALID_ARGUMENT);

  const double wild[3] = {1e12, 0.0, 0.0};
  shecov_q* q_wild = nullptr;
  REQUIRE(shecov_q_create_list(wild, 3, &q_wild) == SHECOV_OK);
  double u_out[3];
  CHECK(shecov_simulate_path(basis, q_wild, u0, 10.0, "euler_maruyama", 0.5, 7, u_out,
                             nullptr) == SHECOV_ERR_DIVERGENCE);
  CHECK(std::string(shecov_last_error()).find("diverged") != std::string::npos);

  shecov_q_destroy(q_wild);
  shecov_q_destroy(q);
  shecov_basis_destroy(basis);
}

TEST_CASE("C API: trajectory CSV dump") {
  const fs::path dir = temp_dir("traj");
  shecov_basis* basis = nullptr;
  REQUIRE(shecov_basis_create(1, 2, &basis) == SHECOV_OK);
  shecov_q* q = nullptr;
  REQUIRE(shecov_q_create_power(0.5, 2.0, 2, &q) == SHECOV_OK);
  double u0[2] = {1.0, 0.0};
  double u_out[2];
  const fs::path csv = dir / "path.csv";
  REQUIRE(shecov_simulate_path(basis, q, u0, 0.01, "exponential_euler", 1e-3, 3, u_out,
                               csv.string().c_str()) == SHECOV_OK);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,t,u_1,u_2");
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 11);
  shecov_q_destroy(q);
  shecov_basis_destroy(basis);
}

TEST_CASE("C API: command layer round trip and error codes") {
  const fs::path theta_dir = temp_dir("capi_theta");
  const fs::path invert_dir = temp_dir("capi_invert");
  const std::string config =
      "{\"basis\":{\"K\":4},\"q\":{\"family\":\"power\",\"c\":0.5,\"s\":2.0}}";

  REQUIRE(shecov_cmd_theta(config.c_str(), theta_dir.string().c_str(), "ode", nullptr) ==
          SHECOV_OK);
  char* report = nullptr;
  REQUIRE(shecov_cmd_invert(config.c_str(), theta_dir.string().c_str(),
                            invert_dir.string().c_str(), &report) == SHECOV_OK);
  REQUIRE(report != nullptr);
  const auto parsed = nlohmann::json::parse(report);
  shecov_string_free(report);
  CHECK(parsed.at("lambda_sq_lsq")[0].get<double>() ==
        doctest::Approx(0.25).epsilon(1e-6));
  CHECK(fs::exists(invert_dir / "report.json"));

  // deleting one pair produces a coverage error naming the pair
  fs::remove(theta_dir / "theta_1_2.csv");
  CHECK(shecov_cmd_invert(config.c_str(), theta_dir.string().c_str(),
                          invert_dir.string().c_str(), nullptr) == SHECOV_ERR_IO);

  // a dataset generated with --pairs misses coverage at invert time
  const fs::path partial_dir = temp_dir("capi_partial");
  REQUIRE(shecov_cmd_theta(config.c_str(), partial_dir.string().c_str(), "ode",
                           "1:1,1:2") == SHECOV_OK);
  CHECK(shecov_cmd_invert(config.c_str(), partial_dir.string().c_str(),
                          invert_dir.string().c_str(), nullptr) == SHECOV_ERR_COVERAGE);
  CHECK(std::string(shecov_last_error()).find("missing pair") != std::string::npos);

  CHECK(shecov_cmd_theta("{\"bad\":1}", theta_dir.string().c_str(), "ode", nullptr) ==
        SHECOV_ERR_INVALID_ARGUMENT);
  CHECK(shecov_cmd_theta(config.c_str(), theta_dir.string().c_str(), "magic", nullptr) ==
        SHECOV_ERR_INVALID_ARGUMENT);

  // unwritable output directory: a plain file occupies the path
  const fs::path blocked = temp_dir("capi_blocked") / "occupied";
  {
    std::ofstream out(blocked);
    out << "x";
  }
  CHECK(shecov_cmd_basis(config.c_str(), blocked.string().c_str()) == SHECOV_ERR_IO);

  char* defaults = nullptr;
  REQUIRE(shecov_config_default(&defaults) == SHECOV_OK);
  CHECK(nlohmann::json::parse(defaults).at("basis").at("K") == 8);
  shecov_string_free(defaults);
}

TEST_CASE("C API: verify command and its negative control") {
  const std::string config = "{\"basis\":{\"K\":4},\"mc\":{\"paths\":64}}";
  char* summary = nullptr;
  int all_passed = 0;
  REQUIRE(shecov_cmd_verify(config.c_str(), nullptr, 0, &summary, &all_passed) ==
          SHECOV_OK);
  CHECK(all_passed == 1);
  REQUIRE(summary != nullptr);
  const auto parsed = nlohmann::json::parse(summary);
  shecov_string_free(summary);
  CHECK(parsed.at("all_passed") == true);
  bool saw_semigroup_law = false;
  for (const auto& property : parsed.at("properties")) {
    CHECK(property.at("pass") == true);
    if (property.at("name") == "covariance.semigroup_law") {
      saw_semigroup_law = true;
      CHECK(property.at("measured").get<double>() <= 1e-10);
    }
  }
  CHECK(saw_semigroup_law);

  // negative control: corrupting the triple tensor must fail the symmetry
  // property and surface as a property failure
  int corrupted_pass = 1;
  CHECK(shecov_cmd_verify(config.c_str(), nullptr, 1, nullptr, &corrupted_pass) ==
        SHECOV_ERR_PROPERTY);
  CHECK(corrupted_pass == 0);
}

TEST_CASE("CLI: exit codes and reproducible outputs") {
  const fs::path dir = temp_dir("cli");
  const fs::path config_path = dir / "config.json";
  {
    std::ofstream out(config_path);
    out << "{\"basis\":{\"K\":3},\"mc\":{\"paths\":40,\"master_seed\":5}}";
  }

  CHECK(run_cli("") == 2);                       // missing subcommand
  CHECK(run_cli("frobnicate") == 2);             // unknown subcommand
  CHECK(run_cli("theta --source nonsense") == 2);
  CHECK(run_cli("invert") == 2);                 // missing --dataset

  const fs::path out_a = dir / "a";
  const fs::path out_b = dir / "b";
  CHECK(run_cli("theta --config " + config_path.string() + " --source mc --out " +
                out_a.string()) == 0);
  CHECK(run_cli("theta --config " + config_path.string() + " --source mc --out " +
                out_b.string()) == 0);
  CHECK(slurp(out_a / "theta_1_1.csv") == slurp(out_b / "theta_1_1.csv"));

  // --seed wins over the file value
  const fs::path out_c = dir / "c";
  CHECK(run_cli("theta --config " + config_path.string() + " --source mc --seed 6 --out " +
                out_c.string()) == 0);
  CHECK(slurp(out_a / "theta_1_1.csv") != slurp(out_c / "theta_1_1.csv"));
  const auto manifest = read_json(out_c / "manifest.json");
  CHECK(manifest.at("config").at("mc").at("master_seed") == 6);

  const fs::path inv = dir / "inv";
  CHECK(run_cli("invert --config " + config_path.string() + " --dataset " +
                out_a.string() + " --out " + inv.string()) == 0);
  CHECK(fs::exists(inv / "report.json"));

  CHECK(run_cli("basis --out " + (dir / "basis").string()) == 0);
  CHECK(fs::exists(dir / "basis" / "eigenvalues.csv"));

  // numerical failures exit with 3: a diverging explicit scheme
  const fs::path wild_config = dir / "wild.json";
  {
    std::ofstream out(wild_config);
    out << "{\"basis\":{\"K\":2},\"q\":{\"list\":[1e12,0]},"
           "\"scheme\":{\"kind\":\"euler_maruyama\",\"dt\":0.05},"
           "\"mc\":{\"paths\":2},\"times\":{\"t0\":10.0}}";
  }
  CHECK(run_cli("theta --config " + wild_config.string() + " --source mc --out " +
                (dir / "wild").string()) == 3);
}
