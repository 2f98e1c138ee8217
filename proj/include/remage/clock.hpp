#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "remage/hypercube.hpp"
#include "remage/landscape.hpp"
#include "remage/rng.hpp"

namespace remage {

class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InitKind { Uniform, Gibbs, Fixed };
enum class Mode { Quenched, Annealed };

std::string to_string(InitKind k);
std::string to_string(Mode m);
InitKind parse_init(const std::string& s);
Mode parse_mode(const std::string& s);

struct InitSpec {
  InitKind kind = InitKind::Uniform;
  Vertex fixed{};
};

// Time scale a_n (steps per unit rescaled time) and clock scale c_n (kept as
// log c_n because it overflows for deep landscapes).
struct ClockScaling {
  double a_n = 1.0;
  double log_c_n = 0.0;

  // a_n = b_n, c_n = r_n.
  static ClockScaling canonical(const ScaleQuantities& s) { return {s.b_n(), s.log_rn}; }
  double c_n() const;
};

// Rescaled clock values c_n^{-1} S~(k), k = 0..K, where K is the first index
// whose value exceeds the horizon. Values are nondecreasing (strictly so up
// to floating-point underflow of tiny increments) and may reach +inf when a
// single trap overwhelms the scale.
struct ClockPath {
  std::vector<double> values;
  std::vector<Vertex> vertices;  // empty unless requested
  double a_n = 1.0;
  double log_c_n = 0.0;
  std::uint64_t seed = 0;

  std::size_t steps() const { return values.size(); }
  // S_n(t) = c_n^{-1} S~(floor(a_n t)).
  double at(double t) const;
};

struct ClockOptions {
  std::uint64_t step_cap = 1'000'000'000ULL;
  bool record_vertices = false;
};

// Sampler for the initial vertex; Gibbs needs a dense landscape.
class InitSampler {
 public:
  InitSampler(const Landscape& L, const InitSpec& init);
  Vertex draw(Rng& rng) const;

 private:
  int n_;
  InitSpec init_;
  std::vector<double> cdf_;
};

ClockPath simulate_clock(const Landscape& L, const InitSpec& init, double horizon, const ClockScaling& sc,
                         Rng& rng, const ClockOptions& opt = {});

// Fresh exponentials on a frozen skeleton (clock values for k = 0..size-1).
ClockPath clock_on_skeleton(const Landscape& L, const std::vector<Vertex>& skeleton, const ClockScaling& sc,
                            Rng& rng);

// Jump-chain skeleton J(0..steps) from init.
std::vector<Vertex> simulate_skeleton(const Landscape& L, const InitSpec& init, std::uint64_t steps, Rng& rng);

// True iff no rescaled clock value lies in the open interval (t, t+s).
bool range_avoids(const ClockPath& path, double t, double s);

// Avoidance from the first range point strictly above t. Shared with the
// subordinator simulator so both use the same open-interval rule.
inline bool avoids_from_first_above(double first_above_t, double t, double s) {
  return s <= 0.0 || first_above_t >= t + s;
}

// Streams clock values and records, for each grid time t_j (sorted), the
// first value strictly above it.
class FirstAbove {
 public:
  explicit FirstAbove(std::vector<double> sorted_times);
  void push(double value);
  // A continuous stretch of the range covering (from, to]: every pending
  // time below `to` has range points arbitrarily close above it.
  void push_continuous(double from, double to);
  bool complete() const { return next_ == times_.size(); }
  double at(std::size_t j) const { return first_[j]; }
  std::size_t index_of(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> first_;
  std::size_t next_ = 0;
};

struct CorrelationEstimate {
  double t = 0.0;
  double rho = 0.0;
  double s = 0.0;
  double p_hat = 0.0;
  double ci_half_width = 0.0;
  std::size_t n_env = 0;
  std::size_t n_chain = 0;
  Mode mode = Mode::Quenched;
  InitKind init = InitKind::Uniform;
  std::vector<double> env_p_hat;  // quenched only
  std::size_t failed_env = 0;
  std::uint64_t seed = 0;
};

struct Cell {
  double t;
  double rho;
};

struct CorrelationConfig {
  LandscapeParams params;
  std::vector<Cell> cells;
  std::optional<ClockScaling> scaling;  // canonical if absent
  std::size_t n_env = 20;
  std::size_t n_chain = 500;
  Mode mode = Mode::Quenched;
  InitSpec init;
  std::uint64_t master_seed = 0;
  LandscapeOptions landscape;
  ClockOptions clock;
  bool tolerate_failures = false;  // record failed environments instead of rethrowing
};

// All cells of the grid are evaluated on the same paths (common random numbers).
std::vector<CorrelationEstimate> estimate_correlation_grid(const CorrelationConfig& cfg);

CorrelationEstimate estimate_correlation(const LandscapeParams& params, double t, double rho,
                                         const ClockScaling& sc, std::size_t n_env, std::size_t n_chain,
                                         Mode mode, InitSpec init, std::uint64_t master_seed);

// Confidence half-width used by every estimator: normal approximation, with
// the Wilson interval when fewer than five successes or failures.
double binomial_half_width(double k, double n);

std::vector<double> gibbs_measure(const Landscape& L);

CorrelationEstimate stationary_start_correlation(const LandscapeParams& params, double t, double s,
                                                 const ClockScaling& sc, std::size_t n_env, std::size_t n_chain,
                                                 std::uint64_t master_seed);

}  // namespace remage
