#pragma once

#include <cstdint>
#include <vector>

#include "remage/clock.hpp"
#include "remage/landscape.hpp"
#include "remage/rng.hpp"

namespace remage {

// Generalized arcsine distribution function: regularized incomplete beta
// I_u(alpha, 1 - alpha).
double asl_cdf(double alpha, double u);

// Marks gamma_k = Gamma_k^{-1/alpha} of a Poisson random measure with
// mean measure mu(x, inf) = x^{-alpha}, truncated at K marks.
struct PrmMarks {
  std::vector<double> gamma;  // strictly decreasing
  std::vector<double> Gamma;  // partial sums of unit exponentials
  double alpha = 0.5;
  std::uint64_t seed = 0;

  std::size_t K() const { return gamma.size(); }
  double Gamma_tail() const { return Gamma.back(); }
  double gamma_tail() const { return gamma.back(); }
  double sum() const;  // sum of stored marks
};

// The exponentials come from the Marks stream of `seed`, shared with
// lepage_landscape so the two are coupled.
PrmMarks sample_prm_marks(double alpha, std::size_t K, std::uint64_t seed);

struct TruncatedValue {
  double value = 0.0;             // stored-mark sum plus expected tail
  double tail = 0.0;              // expected contribution of marks below gamma_K
  double truncation_error = 0.0;  // standard deviation of that contribution
  bool warning = false;           // truncation_error > 1e-6 * value
};

TruncatedValue nu_ext(const PrmMarks& marks, double eps_prime, double u);
TruncatedValue c_sta(const PrmMarks& marks, double s);

// Ordered rescaled landscape r_n^{-1} G_n^{-1}(Gamma_k / Gamma_{N+1}) with a
// seeded uniform labelling onto the vertices.
struct LepageLandscape {
  std::vector<double> log_gamma;     // k = 1..N, decreasing
  std::vector<std::uint64_t> label;  // vertex carrying the k-th value
  std::vector<double> Gamma;         // Gamma_1..Gamma_{N+1}
  ScaleQuantities scale;
  LandscapeParams params;

  Landscape as_landscape() const;
};

LepageLandscape lepage_landscape(const LandscapeParams& params, std::uint64_t seed);
// Top k values only (no labelling); Gamma_{N+1} is still summed exactly.
std::vector<double> lepage_top(const LandscapeParams& params, std::uint64_t seed, std::size_t k);

class SubordinatorSpec {
 public:
  enum class Kind { Stable, ExtremeRandom };

  // nu(u, inf) = c u^{-alpha}; c defaults to alpha Gamma(alpha).
  static SubordinatorSpec stable(double alpha, double c = -1.0);
  static SubordinatorSpec extreme(PrmMarks marks, double eps_prime);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double tail(double u) const;  // nu(u, inf)
  // Drift that compensates the removed jumps below delta: int_0^delta u nu(du).
  double small_jump_mean(double delta) const;

  // Sampler of jumps above a cutoff.
  class JumpSampler {
   public:
    JumpSampler(const SubordinatorSpec& spec, double delta);
    double rate() const { return rate_; }
    double draw(Rng& rng) const;

   private:
    const SubordinatorSpec* spec_;
    double delta_;
    double rate_;
    std::vector<double> cdf_;
  };

 private:
  Kind kind_ = Kind::Stable;
  double alpha_ = 0.5;
  double c_ = 0.0;
  PrmMarks marks_;
  double eps_prime_ = 1.0;
};

struct JumpPath {
  std::vector<double> times;  // jump epochs in [0, T], increasing
  std::vector<double> sizes;  // each >= delta_cut
  double drift = 0.0;         // per unit time
  double horizon = 0.0;

  // S(t) = drift t + sum of jumps up to t.
  double value_at(double t) const;
};

JumpPath simulate_subordinator(const SubordinatorSpec& spec, double T, double delta_cut, Rng& rng,
                               bool compensate = true);

struct OvershootOptions {
  double delta_cut = -1.0;  // default 1e-4 * t
  bool compensate = true;
};

// P(range of S avoids (t, t(1+rho))), replicas independent by seed.
CorrelationEstimate overshoot_correlation(const SubordinatorSpec& spec, double t, double rho,
                                          std::size_t replicas, std::uint64_t seed,
                                          const OvershootOptions& opt = {});

// Paired estimates for several cutoffs on coupled paths: the path for cutoff
// d keeps the jumps >= d of the finest process and replaces the rest by drift.
std::vector<CorrelationEstimate> overshoot_correlation_cutoffs(const SubordinatorSpec& spec, double t, double rho,
                                                               std::size_t replicas, std::uint64_t seed,
                                                               const std::vector<double>& cutoffs,
                                                               bool compensate = true);

}  // namespace remage
