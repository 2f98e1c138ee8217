#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "remage/clock.hpp"
#include "remage/rng.hpp"

namespace remage {

// Bouchaud's trap model on the complete graph: tau'(x) = exp(E_x / alpha).
struct TrapParams {
  std::uint64_t n_states = 0;
  double alpha = 0.5;
  std::uint64_t master_seed = 0;

  void validate() const;
};

class TrapLandscape {
 public:
  explicit TrapLandscape(const TrapParams& p);

  const TrapParams& params() const { return params_; }
  std::uint64_t size() const { return params_.n_states; }
  // log tau' = E / alpha with E a unit exponential keyed by (seed, state).
  double log_tau(std::uint64_t x) const { return -std::log(counter_uniform(site_seed_, x)) / params_.alpha; }

 private:
  TrapParams params_;
  std::uint64_t site_seed_;
};

// a_n = n_states, c_n = a_n^{1/alpha}.
ClockScaling default_trap_scaling(const TrapParams& p);
// c_n = a_n^{1/alpha} for a given a_n.
ClockScaling trap_scaling(double a_n, double alpha);

// Jump chain: uniform over the other n_states - 1 states (self-jumps excluded).
std::uint64_t trap_step(std::uint64_t x, std::uint64_t n_states, Rng& rng);

ClockPath simulate_trap_clock(const TrapParams& p, const ClockScaling& sc, double horizon, Rng& rng,
                              const ClockOptions& opt = {});
ClockPath simulate_trap_clock(const TrapLandscape& L, const ClockScaling& sc, double horizon, Rng& rng,
                              const ClockOptions& opt = {});

// a_n times the state average of exp(-u c_n / tau').
double trap_nu(const TrapLandscape& L, double u, const ClockScaling& sc);

struct TrapCorrelationConfig {
  TrapParams params;
  std::vector<Cell> cells;
  std::optional<ClockScaling> scaling;  // default_trap_scaling if absent
  std::size_t n_env = 20;
  std::size_t n_chain = 500;
  Mode mode = Mode::Quenched;
  std::uint64_t master_seed = 0;
  ClockOptions clock;
};

std::vector<CorrelationEstimate> trap_correlation_grid(const TrapCorrelationConfig& cfg);

struct ComparisonCell {
  double t, rho;
  double p_rem, p_trap;
  double diff;       // p_rem - p_trap
  double pooled_se;  // sqrt(se_rem^2 + se_trap^2), se = half-width / 1.96
  bool within;       // |diff| <= 3 pooled_se
};

struct ComparisonReport {
  std::vector<ComparisonCell> cells;
  bool all_within = true;
  nlohmann::json to_json() const;
};

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ComparisonReport compare_models(const std::vector<CorrelationEstimate>& rem,
                                const std::vector<CorrelationEstimate>& trap);

}  // namespace remage
