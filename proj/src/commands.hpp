#ifndef SHECOV_COMMANDS_HPP
#define SHECOV_COMMANDS_HPP

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "inversion.hpp"
#include "verify.hpp"

namespace shecov {

/// Writes eigenvalues.csv (k, alpha_k) and a checksum over the triple-product
/// tensor for regression pinning; returns the checksum.
std::string cmd_basis(const RunConfig& config, const std::filesystem::path& out_dir);

enum class ThetaSource { ode, mc };
ThetaSource theta_source_from_string(const std::string& s);

/// Generates theta^{i,j}(t0) for all pairs i <= j <= K_obs (or the given
/// subset) and writes the dataset plus manifest into out_dir.
ThetaDataset cmd_theta(const RunConfig& config, const std::filesystem::path& out_dir,
                       ThetaSource source,
                       const std::optional<std::vector<std::pair<int, int>>>& pairs = {});

/// Runs the full inversion pipeline from an on-disk dataset; writes
/// report.json into out_dir and returns the report.
InversionReport cmd_invert(const RunConfig& config,
                           const std::filesystem::path& dataset_dir,
                           const std::filesystem::path& out_dir);

nlohmann::json inversion_report_json(const InversionReport& report,
                                     const RunConfig& config);

/// Executes the property suites; writes verify.json when out_dir is given.
std::vector<PropertyResult> cmd_verify(const RunConfig& config,
                                       const std::optional<std::filesystem::path>& out_dir,
                                       const VerifyOptions& options = {});

struct SweepSpec {
  std::string kind;            // dt | K | M | t0
  std::vector<double> values;  // interpreted per kind
};

struct ConvergeRow {
  double value = 0.0;
  double forward_error = std::numeric_limits<double>::quiet_NaN();
  double mean_stderr = std::numeric_limits<double>::quiet_NaN();
  double inversion_error = std::numeric_limits<double>::quiet_NaN();
  double pairing_error_1 = std::numeric_limits<double>::quiet_NaN();
  int recovered_rank = -1;
};

/// Empirical convergence studies; writes converge_<kind>.csv and a manifest.
std::vector<ConvergeRow> cmd_converge(const RunConfig& config,
                                      const std::filesystem::path& out_dir,
                                      const SweepSpec& sweep);

/// Data generation (exact or Monte Carlo per config) followed by the full
/// inversion pipeline.
InversionReport end_to_end(const RunConfig& config, ThetaSource source);

/// In-memory dataset generation shared by cmd_theta and end_to_end.
ThetaDataset generate_theta_dataset(
    const RunConfig& config, ThetaSource source,
    const std::optional<std::vector<std::pair<int, int>>>& pairs = {});

} // namespace shecov

#endif
