#include "sde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace shecov {

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "euler_maruyama") return SchemeKind::euler_maruyama;
  if (name == "exponential_euler") return SchemeKind::exponential_euler;
  throw std::invalid_argument("scheme: unknown kind '" + name + "'");
}

std::string to_string(SchemeKind kind) {
  return kind == SchemeKind::euler_maruyama ? "euler_maruyama" : "exponential_euler";
}

Eigen::VectorXd unit_field(int modes, int k) {
  if (k < 1 || k > modes) throw std::out_of_range("unit_field: mode index out of range");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(modes);
  u(k - 1) = 1.0;
  return u;
}

namespace {

// Precomputed tables for stepping one (basis, q, scheme) configuration.
class Stepper {
public:
  Stepper(const Basis& basis, const QSpec& q, const SdeScheme& scheme)
      : scheme_(scheme), modes_(basis.mode_count()) {
    if (!(scheme.dt > 0.0))
      throw std::invalid_argument("scheme: dt must be > 0");
    alpha_.resize(modes_);
    decay_.resize(modes_);
    noise_weight_.resize(modes_);
    for (int i = 1; i <= modes_; ++i) {
      alpha_(i - 1) = basis.eigenvalue(i);
      decay_(i - 1) = std::exp(-alpha_(i - 1) * scheme.dt);
      // Integrated-variance weight of the exponential scheme: the noise
      // enters with the exact per-mode OU variance over one step, which
      // removes the O(alpha dt) weak bias of end-of-step noise placement.
      const double two_alpha_dt = 2.0 * alpha_(i - 1) * scheme.dt;
      noise_weight_(i - 1) =
          two_alpha_dt > 1e-12
              ? std::sqrt((1.0 - std::exp(-two_alpha_dt)) / two_alpha_dt)
              : 1.0;
    }
    const int kmax = std::min(q.count(), modes_);
    for (int k = 1; k <= kmax; ++k) {
      if (q.lambda(k) == 0.0) continue;
      Eigen::MatrixXd slice(modes_, modes_);
      for (int m = 1; m <= modes_; ++m)
        for (int i = 1; i <= modes_; ++i)
          slice(m - 1, i - 1) = basis.triple_product(k, m, i);
      active_.push_back({k, q.lambda(k), std::move(slice)});
    }
    sqrt_dt_ = std::sqrt(scheme.dt);
  }

  int modes() const { return modes_; }
  int noise_modes() const { return static_cast<int>(active_.size()); }

  std::int64_t step_count(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("simulate: t must be >= 0");
    if (t == 0.0) return 0;
    const std::int64_t n = std::max<std::int64_t>(1, std::llround(t / scheme_.dt));
    if (std::abs(n * scheme_.dt - t) > scheme_.dt * (1.0 + 1e-9))
      throw std::invalid_argument("scheme: dt does not divide the horizon within one step");
    return n;
  }

  // Advance one step given the raw N(0, dt) increments (one per retained
  // noise mode, indexed by mode number).
  void step(Eigen::VectorXd& u, std::span<const double> noise) const {
    Eigen::VectorXd diffusion = Eigen::VectorXd::Zero(modes_);
    for (const auto& a : active_)
      diffusion.noalias() += (a.lambda * noise[a.mode - 1]) * (a.slice * u);
    if (scheme_.kind == SchemeKind::euler_maruyama) {
      u = (u.array() * (1.0 - alpha_.array() * scheme_.dt)).matrix() + diffusion;
    } else {
      u = (decay_.array() * u.array() + noise_weight_.array() * diffusion.array())
              .matrix();
    }
  }

  Eigen::VectorXd run_path(const Eigen::VectorXd& u0, double t,
                           std::uint64_t path_seed, std::int64_t path_index,
                           Trajectory* trajectory) const {
    const std::int64_t steps = step_count(t);
    Eigen::VectorXd u = u0;
    std::vector<double> noise(modes_, 0.0);
    if (trajectory) {
      trajectory->times.clear();
      trajectory->states.clear();
      trajectory->times.push_back(0.0);
      trajectory->states.push_back(u);
    }
    for (std::int64_t s = 0; s < steps; ++s) {
      for (const auto& a : active_)
        noise[a.mode - 1] = sqrt_dt_ * normal_draw(path_seed, static_cast<std::uint64_t>(s),
                                                   static_cast<std::uint32_t>(a.mode));
      step(u, noise);
      if (!std::isfinite(u.squaredNorm()))
        throw DivergenceError(s, path_index, path_seed);
      if (trajectory) {
        trajectory->times.push_back((s + 1) * scheme_.dt);
        trajectory->states.push_back(u);
      }
    }
    return u;
  }

private:
  struct ActiveMode {
    int mode;
    double lambda;
    Eigen::MatrixXd slice;  // T[k][m][i] over (m, i)
  };
  SdeScheme scheme_;
  int modes_;
  double sqrt_dt_ = 0.0;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd decay_;
  Eigen::VectorXd noise_weight_;
  std::vector<ActiveMode> active_;
};

void check_field(const Eigen::VectorXd& u, int modes, const char* what) {
  if (static_cast<int>(u.size()) != modes)
    throw std::invalid_argument(std::string(what) + ": field length does not match the truncation");
}

// Simulate paths [0, M) storing one result vector per path; worker threads own
// disjoint contiguous ranges and the first failure wins.
template <typename PathFn>
void run_paths(std::int64_t paths, int threads, const PathFn& fn) {
  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(paths)));
  if (n_threads == 1) {
    for (std::int64_t p = 0; p < paths; ++p) fn(p);
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  const std::int64_t chunk = (paths + n_threads - 1) / n_threads;
  for (int w = 0; w < n_threads; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min(paths, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::int64_t p = lo; p < hi; ++p) fn(p);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct MomentSums {
  Eigen::MatrixXd first;   // sum of per-path matrices
  Eigen::MatrixXd second;  // sum of entrywise squares
};

// Fixed-shape pairwise reduction over the path index; identical results at
// every thread count because it runs after all paths are stored.
MomentSums pairwise_moments(const std::function<Eigen::MatrixXd(std::int64_t)>& term,
                            std::int64_t lo, std::int64_t hi) {
  if (hi - lo == 1) {
    Eigen::MatrixXd z = term(lo);
    return {z, z.cwiseProduct(z)};
  }
  const std::int64_t mid = lo + (hi - lo) / 2;
  MomentSums left = pairwise_moments(term, lo, mid);
  const MomentSums right = pairwise_moments(term, mid, hi);
  left.first += right.first;
  left.second += right.second;
  return left;
}

ThetaEstimate finish_estimate(const MomentSums& sums, std::int64_t m,
                              bool degenerate) {
  ThetaEstimate est;
  est.theta = sums.first / static_cast<double>(m);
  if (degenerate) {
    // All per-path samples are bit-identical; the sample variance is zero.
    est.std_error = Eigen::MatrixXd::Zero(est.theta.rows(), est.theta.cols());
    return est;
  }
  const Eigen::MatrixXd variance =
      ((sums.second / static_cast<double>(m)) - est.theta.cwiseProduct(est.theta))
          .cwiseMax(0.0) *
      (static_cast<double>(m) / static_cast<double>(m - 1));
  est.std_error = (variance / static_cast<double>(m)).cwiseSqrt();
  return est;
}

} // namespace

Eigen::VectorXd drift_diffusion_step(const Eigen::VectorXd& u, const Basis& basis,
                                     const QSpec& q, const SdeScheme& scheme,
                                     std::span<const double> noise) {
  const Stepper stepper(basis, q, scheme);
  check_field(u, stepper.modes(), "drift_diffusion_step");
  if (static_cast<int>(noise.size()) < basis.mode_count())
    throw std::invalid_argument("drift_diffusion_step: one increment per noise mode required");
  Eigen::VectorXd out = u;
  stepper.step(out, noise);
  return out;
}

Eigen::VectorXd simulate_path(const Eigen::VectorXd& u0, double t, const Basis& basis,
                              const QSpec& q, const SdeScheme& scheme,
                              std::uint64_t path_seed, Trajectory* trajectory,
                              std::int64_t path_index) {
  const Stepper stepper(basis, q, scheme);
  check_field(u0, stepper.modes(), "simulate_path");
  return stepper.run_path(u0, t, path_seed, path_index, trajectory);
}

ThetaEstimate mc_theta(const Eigen::VectorXd& u0, double t, const Basis& basis,
                       const QSpec& q, const MCEnsemble& ensemble) {
  if (ensemble.paths < 2)
    throw std::invalid_argument("mc_theta: at least 2 paths required");
  const Stepper stepper(basis, q, ensemble.scheme);
  check_field(u0, stepper.modes(), "mc_theta");

  std::vector<Eigen::VectorXd> finals(ensemble.paths);
  run_paths(ensemble.paths, ensemble.threads, [&](std::int64_t p) {
    finals[p] = stepper.run_path(u0, t, derive_path_seed(ensemble.master_seed, p), p,
                                 nullptr);
  });

  bool degenerate = true;
  for (std::int64_t p = 1; p < ensemble.paths && degenerate; ++p)
    degenerate = (finals[p] == finals[0]);

  const MomentSums sums = pairwise_moments(
      [&](std::int64_t p) -> Eigen::MatrixXd {
        return finals[p] * finals[p].transpose();
      },
      0, ensemble.paths);
  return finish_estimate(sums, ensemble.paths, degenerate);
}

ThetaEstimate mc_theta_ij(int i, int j, double t, const Basis& basis, const QSpec& q,
                          const MCEnsemble& ensemble) {
  if (ensemble.paths < 2)
    throw std::invalid_argument("mc_theta_ij: at least 2 paths required");
  const Stepper stepper(basis, q, ensemble.scheme);
  const int modes = stepper.modes();
  if (i < 1 || j < 1 || i > modes || j > modes)
    throw std::out_of_range("mc_theta_ij: mode pair outside the truncation");

  const Eigen::VectorXd plus = unit_field(modes, i) + unit_field(modes, j);
  const Eigen::VectorXd minus = unit_field(modes, i) - unit_field(modes, j);

  std::vector<Eigen::VectorXd> final_plus(ensemble.paths);
  std::vector<Eigen::VectorXd> final_minus(ensemble.paths);
  run_paths(ensemble.paths, ensemble.threads, [&](std::int64_t p) {
    const std::uint64_t seed = derive_path_seed(ensemble.master_seed, p);
    final_plus[p] = stepper.run_path(plus, t, seed, p, nullptr);
    final_minus[p] = stepper.run_path(minus, t, seed, p, nullptr);
  });

  bool degenerate = true;
  for (std::int64_t p = 1; p < ensemble.paths && degenerate; ++p)
    degenerate = (final_plus[p] == final_plus[0]) && (final_minus[p] == final_minus[0]);

  const MomentSums sums = pairwise_moments(
      [&](std::int64_t p) -> Eigen::MatrixXd {
        return final_plus[p] * final_plus[p].transpose() -
               final_minus[p] * final_minus[p].transpose();
      },
      0, ensemble.paths);
  return finish_estimate(sums, ensemble.paths, degenerate);
}

} // namespace shecov
