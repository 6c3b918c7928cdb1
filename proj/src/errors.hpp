#ifndef SHECOV_ERRORS_HPP
#define SHECOV_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shecov {

// Thrown when stepping produces a non-finite state. Carries enough context
// to replay the offending path.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(std::int64_t step, std::int64_t path, std::uint64_t path_seed,
                  const std::string& context = {})
      : std::runtime_error("trajectory diverged at step " + std::to_string(step) +
                           " (path " + std::to_string(path) + ", path_seed " +
                           std::to_string(path_seed) + ")" +
                           (context.empty() ? "" : " " + context)),
        step_(step), path_(path), path_seed_(path_seed) {}

  std::int64_t step() const { return step_; }
  std::int64_t path() const { return path_; }
  std::uint64_t path_seed() const { return path_seed_; }

private:
  std::int64_t step_;
  std::int64_t path_;
  std::uint64_t path_seed_;
};

// A symmetric-matrix eigenvalue dropped below zero where a logarithm is
// required; the data are too noisy for backward recovery.
class SpectralPositivityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Dataset does not cover every (i,j) pair the reconstruction needs.
class CoverageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An input violated a documented contract (non-symmetric matrix where a
// symmetric one is promised, exact data with visible asymmetry, ...).
class ContractViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Eigensolver or other numerical kernel failed to converge.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace shecov

#endif
