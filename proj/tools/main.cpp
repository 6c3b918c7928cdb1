// shecov command-line driver. All numerics go through the shared-library C
// API; this binary only parses flags, merges config overrides and maps status
// codes onto exit codes (0 ok, 1 property failure, 2 usage, 3 numerical).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shecov.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(shecov_status status) {
  switch (status) {
    case SHECOV_OK:
      return kExitOk;
    case SHECOV_ERR_PROPERTY:
      return kExitPropertyFailure;
    case SHECOV_ERR_INVALID_ARGUMENT:
    case SHECOV_ERR_INDEX:
    case SHECOV_ERR_DOMAIN:
    case SHECOV_ERR_IO:
    case SHECOV_ERR_COVERAGE:
      return kExitUsage;
    default:
      return kExitNumerical;
  }
}

int report_failure(shecov_status status) {
  std::cerr << "error: " << shecov_last_error() << "\n";
  return exit_code_for(status);
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path, "configuration file (JSON)");
  cmd->add_option("--out", options.out_dir, "output directory (overrides output.dir)");
  cmd->add_option("--seed", options.seed, "master seed (overrides mc.master_seed)");
}

// Flags win over file values.
std::string merged_config(const CommonOptions& options) {
  nlohmann::json config = nlohmann::json::object();
  if (!options.config_path.empty()) {
    std::ifstream in(options.config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + options.config_path);
    try {
      in >> config;
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
    }
  }
  if (options.seed) config["mc"]["master_seed"] = *options.seed;
  if (!options.out_dir.empty()) config["output"]["dir"] = options.out_dir;
  return config.dump();
}

std::string output_dir(const CommonOptions& options, const std::string& merged) {
  if (!options.out_dir.empty()) return options.out_dir;
  const auto config = nlohmann::json::parse(merged);
  if (config.contains("output") && config.at("output").contains("dir"))
    return config.at("output").at("dir").get<std::string>();
  return "out";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"shecov: forward/inverse toolkit for the stochastic heat equation "
               "with multiplicative Q-noise"};
  app.set_version_flag("--version", std::string(shecov_version()));
  app.require_subcommand(1);

  CommonOptions basis_opts;
  CLI::App* basis_cmd =
      app.add_subcommand("basis", "eigenvalue table and triple-product checksum");
  add_common(basis_cmd, basis_opts);

  CommonOptions theta_opts;
  std::string theta_source = "ode";
  std::string theta_pairs;
  CLI::App* theta_cmd =
      app.add_subcommand("theta", "generate the theta^{i,j}(t0) dataset");
  add_common(theta_cmd, theta_opts);
  theta_cmd->add_option("--source", theta_source, "data source: mc | ode")
      ->check(CLI::IsMember({"mc", "ode"}));
  theta_cmd->add_option("--pairs", theta_pairs,
                        "restrict to listed pairs, e.g. 1:1,1:2");

  CommonOptions invert_opts;
  std::string dataset_dir;
  CLI::App* invert_cmd =
      app.add_subcommand("invert", "recover lambda_k^2 from a theta dataset");
  add_common(invert_cmd, invert_opts);
  invert_cmd->add_option("--dataset", dataset_dir, "dataset directory")->required();

  CommonOptions verify_opts;
  bool corrupt_t = false;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run the module property suites");
  add_common(verify_cmd, verify_opts);
  verify_cmd
      ->add_flag("--corrupt-t", corrupt_t,
                 "negative control: corrupt the triple tensor so symmetry must fail")
      ->group("");  // test hook, hidden from help

  CommonOptions converge_opts;
  std::string sweep_kind;
  std::vector<double> sweep_values;
  CLI::App* converge_cmd =
      app.add_subcommand("converge", "convergence studies over dt, K, M or t0");
  add_common(converge_cmd, converge_opts);
  converge_cmd->add_option("--sweep", sweep_kind, "sweep kind: dt | K | M | t0")
      ->required()
      ->check(CLI::IsMember({"dt", "K", "M", "t0"}));
  converge_cmd->add_option("--values", sweep_values, "sweep points")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int cli_exit = app.exit(e);
    return cli_exit == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (basis_cmd->parsed()) {
      const std::string config = merged_config(basis_opts);
      const shecov_status status =
          shecov_cmd_basis(config.c_str(), output_dir(basis_opts, config).c_str());
      if (status != SHECOV_OK) return report_failure(status);
      std::cout << "basis tables written\n";
      return kExitOk;
    }

    if (theta_cmd->parsed()) {
      const std::string config = merged_config(theta_opts);
      const shecov_status status = shecov_cmd_theta(
          config.c_str(), output_dir(theta_opts, config).c_str(), theta_source.c_str(),
          theta_pairs.empty() ? nullptr : theta_pairs.c_str());
      if (status != SHECOV_OK) return report_failure(status);
      std::cout << "theta dataset written (source " << theta_source << ")\n";
      return kExitOk;
    }

    if (invert_cmd->parsed()) {
      const std::string config = merged_config(invert_opts);
      char* report = nullptr;
      const shecov_status status =
          shecov_cmd_invert(config.c_str(), dataset_dir.c_str(),
                            output_dir(invert_opts, config).c_str(), &report);
      if (status != SHECOV_OK) return report_failure(status);
      if (report) {
        std::cout << report << "\n";
        shecov_string_free(report);
      }
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      const std::string config = merged_config(verify_opts);
      const std::string out = output_dir(verify_opts, config);
      char* summary = nullptr;
      int all_passed = 0;
      const shecov_status status = shecov_cmd_verify(
          config.c_str(), out.c_str(), corrupt_t ? 1 : 0, &summary, &all_passed);
      if (summary) {
        const auto parsed = nlohmann::json::parse(summary);
        for (const auto& property : parsed.at("properties"))
          std::printf("%s  %-45s measured=%.6g threshold=%.6g\n",
                      property.at("pass").get<bool>() ? "PASS" : "FAIL",
                      property.at("name").get<std::string>().c_str(),
                      property.at("measured").get<double>(),
                      property.at("threshold").get<double>());
        shecov_string_free(summary);
      }
      if (status == SHECOV_ERR_PROPERTY) {
        std::cerr << "verify: at least one property failed\n";
        return kExitPropertyFailure;
      }
      if (status != SHECOV_OK) return report_failure(status);
      std::cout << "verify: all properties passed\n";
      return kExitOk;
    }

    if (converge_cmd->parsed()) {
      const std::string config = merged_config(converge_opts);
      const shecov_status status = shecov_cmd_converge(
          config.c_str(), output_dir(converge_opts, config).c_str(), sweep_kind.c_str(),
          sweep_values.data(), static_cast<int>(sweep_values.size()));
      if (status != SHECOV_OK) return report_failure(status);
      std::cout << "converge tables written (sweep " << sweep_kind << ")\n";
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
