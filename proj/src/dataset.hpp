#ifndef SHECOV_DATASET_HPP
#define SHECOV_DATASET_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "inversion.hpp"

namespace shecov {

// On-disk layout of a theta dataset, stable schemas:
//   <dir>/theta_<i>_<j>.csv           K x K matrix, 17-significant-digit values
//   <dir>/theta_<i>_<j>_stderr.csv    entrywise standard errors (MC data only)
//   <dir>/index.json                  schema, t0, K, K_obs, provenance, pairs,
//                                     lambda spec, ensemble metadata
//   <dir>/manifest.json               command echo sufficient to reproduce

inline constexpr const char* kDatasetSchema = "shecov.theta/1";
inline constexpr const char* kManifestSchema = "shecov.manifest/1";

/// Matrix values serialized with 17 significant digits, comma separated.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

std::string format_double(double v);

void write_theta_dataset(const std::filesystem::path& dir, const ThetaDataset& data,
                         const nlohmann::json& lambda_spec,
                         const nlohmann::json& ensemble);
ThetaDataset read_theta_dataset(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& config, const nlohmann::json& extra = {});

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace shecov

#endif
