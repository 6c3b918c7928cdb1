#include "dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace shecov {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged CSV in '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty CSV '" + path.string() + "'");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in '" + path.string() + "': " + e.what());
  }
  return j;
}

namespace {

std::string pair_file(int i, int j, bool stderr_file) {
  return "theta_" + std::to_string(i) + "_" + std::to_string(j) +
         (stderr_file ? "_stderr.csv" : ".csv");
}

} // namespace

void write_theta_dataset(const fs::path& dir, const ThetaDataset& data,
                         const json& lambda_spec, const json& ensemble) {
  fs::create_directories(dir);
  const bool mc = data.provenance == ThetaDataset::Provenance::monte_carlo;

  json pairs = json::array();
  for (const auto& [key, matrix] : data.entries) {
    const auto [i, j] = key;
    write_matrix_csv(dir / pair_file(i, j, false), matrix);
    json entry{{"i", i}, {"j", j}, {"file", pair_file(i, j, false)}};
    if (mc) {
      const auto se = data.std_errors.find(key);
      if (se != data.std_errors.end()) {
        write_matrix_csv(dir / pair_file(i, j, true), se->second);
        entry["stderr_file"] = pair_file(i, j, true);
      }
    }
    pairs.push_back(entry);
  }

  json index{{"schema", kDatasetSchema},
             {"t0", data.t0},
             {"dim", data.dim},
             {"K", data.modes},
             {"K_obs", data.k_obs},
             {"provenance", mc ? "mc" : "ode"},
             {"pairs", pairs},
             {"lambda", lambda_spec}};
  if (mc)
    index["mc"] = json{{"paths", data.mc_paths}, {"master_seed", data.mc_master_seed}};
  if (!ensemble.is_null()) index["ensemble"] = ensemble;
  write_json(dir / "index.json", index);
}

ThetaDataset read_theta_dataset(const fs::path& dir) {
  const json index = read_json(dir / "index.json");
  if (!index.contains("schema") || index.at("schema").get<std::string>() != kDatasetSchema)
    throw IoError("dataset index '" + (dir / "index.json").string() +
                  "' has an unsupported schema");

  ThetaDataset data;
  data.t0 = index.at("t0").get<double>();
  data.dim = index.value("dim", 1);
  data.modes = index.at("K").get<int>();
  data.k_obs = index.at("K_obs").get<int>();
  const std::string prov = index.at("provenance").get<std::string>();
  data.provenance = (prov == "mc") ? ThetaDataset::Provenance::monte_carlo
                                   : ThetaDataset::Provenance::exact;
  if (index.contains("mc")) {
    data.mc_paths = index.at("mc").at("paths").get<std::int64_t>();
    data.mc_master_seed = index.at("mc").at("master_seed").get<std::uint64_t>();
  }
  for (const auto& entry : index.at("pairs")) {
    const int i = entry.at("i").get<int>();
    const int j = entry.at("j").get<int>();
    data.entries[{i, j}] = read_matrix_csv(dir / entry.at("file").get<std::string>());
    if (entry.contains("stderr_file"))
      data.std_errors[{i, j}] =
          read_matrix_csv(dir / entry.at("stderr_file").get<std::string>());
  }
  return data;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunConfig& config, const json& extra) {
  fs::create_directories(dir);
  json manifest{{"schema", kManifestSchema},
                {"version", version_string()},
                {"command", command},
                {"config", echo_config(config)}};
  if (!extra.is_null() && !extra.empty()) manifest["extra"] = extra;
  write_json(dir / "manifest.json", manifest);
}

} // namespace shecov
