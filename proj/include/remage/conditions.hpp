#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "remage/clock.hpp"
#include "remage/hypercube.hpp"
#include "remage/landscape.hpp"

namespace remage {

// h^u(y) = (1/n) sum over neighbours x of y of exp(-u c_n / tau(x)).
double h_u(const Landscape& L, Vertex y, double u, double log_c_n);
// h^u for every vertex (dense landscapes).
std::vector<double> h_table(const Landscape& L, double u, double log_c_n);

class InsufficientSkeleton : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sums of h^u(J(j-1)) and h^u(J(j-1))^2 over j = 1..floor(a_n t).
double nu_chain(const std::vector<Vertex>& J, const std::vector<double>& h, double t, double a_n);
double sigma2_chain(const std::vector<Vertex>& J, const std::vector<double>& h, double t, double a_n);
double nu_chain(const std::vector<Vertex>& J, const Landscape& L, double u, double t, const ClockScaling& sc);
double sigma2_chain(const std::vector<Vertex>& J, const Landscape& L, double u, double t, const ClockScaling& sc);

// Chain averages, exact over the whole cube.
double nu_avg(const Landscape& L, double u, const ClockScaling& sc);
double sigma2_avg(const Landscape& L, double u, const ClockScaling& sc);

struct SampledValue {
  double value = 0.0;
  double variance = 0.0;  // variance of the estimator
};

// Vertex-sampled versions for cubes too large to sweep.
SampledValue nu_avg_sampled(const Landscape& L, double u, const ClockScaling& sc, std::size_t samples,
                            std::uint64_t seed);
SampledValue sigma2_avg_sampled(const Landscape& L, double u, const ClockScaling& sc, std::size_t samples,
                                std::uint64_t seed);

// E nu_n(u) = a_n E exp(-u c_n / tau), by quadrature against the tail.
double expected_nu(const ScaleQuantities& s, double u, const ClockScaling& sc);

// int_0^delta nu_n(u) du, termwise in closed form.
double a3_integral(const Landscape& L, double delta, const ClockScaling& sc);

struct ThetaTerms {
  double mixing = 0.0;    // (k/a)^2 nu^2 / 2^n
  double variance = 0.0;  // (k/a) sigma^2
  double pairs = 0.0;     // c nu(2u) / n^2
  double bias = 0.0;      // rho_n (E nu)^2
  double total() const { return mixing + variance + pairs + bias; }
};

ThetaTerms theta_terms(const Landscape& L, double u, double t, const ClockScaling& sc, double rho_n,
                       double c = 10.0);
double theta_bound(const Landscape& L, double u, double t, const ClockScaling& sc, double rho_n, double c = 10.0);

struct ConditionOptions {
  std::optional<ClockScaling> scaling;  // canonical if absent
  std::size_t skeletons = 200;
  std::uint64_t seed = 0;
  double c_theta = 10.0;
  double c0 = 2.0;
  std::optional<double> rho_n;  // 1/log n if absent
  double a1_tol = 0.15;
  double a2_tol = 0.05;
  double a0_tol = 0.01;
  std::size_t marks_K = 100000;
  ClassifyThresholds thresholds;
};

struct ConditionReport {
  double t = 0.0;
  std::vector<double> u_grid;
  std::vector<double> delta_grid;
  ScaleClass scale;
  std::string target_kind;
  double alpha = 0.0;

  std::vector<std::vector<double>> nu_chain;      // [u][skeleton]
  std::vector<std::vector<double>> sigma2_chain;  // [u][skeleton]
  std::vector<double> nu_chain_median, sigma2_chain_median;
  std::vector<double> nu_avg, sigma2_avg, nu_avg_2u;
  std::vector<double> expected_nu;
  std::vector<double> theta_bound;
  std::vector<double> limit_target;  // nu_target(u, inf)
  std::vector<double> a0_value;      // nu_n(u)/a_n
  std::vector<double> a3_integral, a3_envelope, a3_eps;

  double a1_max_deviation = 0.0;
  bool a0_pass = false, a1_pass = false, a2_pass = false, a3_pass = false;

  nlohmann::json to_json(bool include_samples = false) const;
};

ConditionReport check_conditions(const LandscapeParams& params, double t, const std::vector<double>& u_grid,
                                 const std::vector<double>& delta_grid, const ConditionOptions& opt = {});

}  // namespace remage
