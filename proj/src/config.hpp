#ifndef SHECOV_CONFIG_HPP
#define SHECOV_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "basis.hpp"
#include "noise.hpp"
#include "sde.hpp"

namespace shecov {

/// One structured configuration drives every command. Every field has a
/// documented default; unknown keys are rejected so typos cannot silently
/// fall back to defaults. All randomness flows from mc.master_seed.
struct RunConfig {
  struct BasisCfg {
    int dim = 1;
    int modes = 8;  // "K"
  };
  struct QCfg {
    std::optional<std::vector<double>> list;  // explicit lambda values
    double power_c = 0.5;                     // lambda_k = c k^{-s} otherwise
    double power_s = 2.0;
    std::optional<int> power_truncation;      // defaults to basis.K
  };
  struct SchemeCfg {
    SchemeKind kind = SchemeKind::exponential_euler;
    double dt = 1e-3;
  };
  struct McCfg {
    std::int64_t paths = 20000;
    std::uint64_t master_seed = 20250801;
    int threads = 0;
  };
  struct TimesCfg {
    double t0 = 0.1;
    std::vector<double> grid;  // extra output times, command specific
  };
  struct InversionCfg {
    double floor = -1.0;  // < 0 selects the default 1e-12 * max(mu)
    int k_obs = 0;        // 0 means the full truncation
  };
  struct OutputCfg {
    std::string dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
  };

  BasisCfg basis;
  QCfg q;
  SchemeCfg scheme;
  McCfg mc;
  TimesCfg times;
  InversionCfg inversion;
  OutputCfg output;

  int k_obs_effective() const {
    return inversion.k_obs > 0 ? inversion.k_obs : basis.modes;
  }
};

/// Strict parse: rejects unknown keys at every level.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);

/// Full echo with all defaults materialized; reproduces the run byte for
/// byte given the same binary version.
nlohmann::json echo_config(const RunConfig& config);

Basis make_basis(const RunConfig& config);
QSpec make_qspec(const RunConfig& config);
nlohmann::json lambda_spec_json(const RunConfig& config);

const char* version_string();

} // namespace shecov

#endif
