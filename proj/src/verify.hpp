#ifndef SHECOV_VERIFY_HPP
#define SHECOV_VERIFY_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace shecov {

struct PropertyResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;   // the quantity compared against the threshold
  double threshold = 0.0;
  std::string note;
};

struct VerifyOptions {
  // Negative control: perturb a copy of the triple-product tensor so the
  // symmetry property must fail. Test hook only.
  bool corrupt_triple_tensor = false;
};

/// Executes the invariants-and-properties suites of all modules against the
/// given configuration; each result carries the measured value.
std::vector<PropertyResult> run_property_suite(const RunConfig& config,
                                               const VerifyOptions& options = {});

bool all_passed(const std::vector<PropertyResult>& results);
nlohmann::json properties_json(const std::vector<PropertyResult>& results);

} // namespace shecov

#endif
