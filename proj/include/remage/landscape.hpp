#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace remage {

// Space scale given either directly (as log r_n, since r_n itself overflows
// at moderate n) or through a target exponent epsilon with m_n = ceil(eps n).
struct ExplicitScale {
  double log_rn;
};
struct EpsilonScale {
  double epsilon;
};
using ScaleSpec = std::variant<ExplicitScale, EpsilonScale>;

struct LandscapeParams {
  int n = 0;
  double beta = 0.0;
  ScaleSpec scale = EpsilonScale{0.5};
  std::uint64_t master_seed = 0;

  void validate() const;  // throws std::invalid_argument
};

// Derived scale quantities; everything exponential is kept in log form.
struct ScaleQuantities {
  int n = 0;
  double beta = 0.0;
  double beta_sqrt_n = 0.0;
  double log_rn = 0.0;
  double log_bn = 0.0;
  double m_n = 0.0;     // log2 b_n
  double B_bar = 0.0;   // log r_n / (beta sqrt n), so b_n (1 - Phi(B_bar)) = 1
  double B_n = 0.0;     // b_n phi(B_n) / B_n = 1
  double A_n = 0.0;     // 1 / B_n
  double alpha_n = 0.0; // B_n / (beta sqrt n)

  double b_n() const;
  double r_n() const;  // may be +inf
};

ScaleQuantities compute_scale(const LandscapeParams& p);

struct BnSolution {
  double B;
  double A;
};

// Root of b phi(B)/B = 1 on B > 0. phi(B)/B decreases strictly from +inf to 0,
// so every b > 0 has exactly one root.
BnSolution solve_Bn(double b_n);
BnSolution solve_Bn_log(double log_bn);
// Hall's second-order surrogate, defined for log b > 1.
double hall_surrogate(double log_bn);

class UnsolvableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Tail function and its inverse on the rescaled landscape.
double h_n(double v, const ScaleQuantities& s);
double g_n(double u, const ScaleQuantities& s);
double log_g_n(double u, const ScaleQuantities& s);
// log g_n evaluated at u = b_n exp(log_p); used by the order-statistics map.
double log_g_at_log_prob(double log_p, const ScaleQuantities& s);

// P(tau > u) and its inverse, in log form.
double log_Gn(double log_u, const ScaleQuantities& s);
double log_Gn_inverse(double log_p, const ScaleQuantities& s);

double beta_c(double epsilon);
double derive_log_rn_from_epsilon(int n, double beta, double epsilon);
double derive_rn_from_epsilon(int n, double beta, double epsilon);

enum class ScaleKind { Short, Intermediate, Extreme };
std::string to_string(ScaleKind k);

struct ClassifyThresholds {
  double short_max = 0.05;   // m_n / n at or below: short
  double extreme_min = 0.5;  // 2^{m_n} / 2^n at or above: extreme
};

struct ScaleClass {
  ScaleKind kind = ScaleKind::Intermediate;
  double epsilon = 0.0;
  std::optional<double> epsilon_prime;
  double m_n = 0.0;
  double alpha_n = 0.0;
  double alpha_eps = 0.0;
};

ScaleClass classify_scale(const ScaleQuantities& s, const ClassifyThresholds& th = {});
nlohmann::json to_json(const ScaleQuantities& s);
nlohmann::json to_json(const ScaleClass& c);

enum class Storage { Dense, OnDemand };

struct LandscapeOptions {
  int dense_limit = 30;
  int hard_cap = 48;
  bool force_on_demand = false;
};

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Standard Gaussian H_n(x) for site x under a landscape seed. Counter based,
// so dense and on-demand storage agree bit for bit.
double site_gaussian(std::uint64_t seed, std::uint64_t x);

class Landscape {
 public:
  static Landscape sample(const LandscapeParams& p, const LandscapeOptions& opt = {});
  // Test hook: tau identically exp(log_tau_value). Bypasses the beta > 0 check.
  static Landscape constant(int n, double log_tau_value);
  // Dense landscape from explicit log tau values (vertex order).
  static Landscape from_log_tau(const LandscapeParams& p, std::vector<double> log_tau);

  const LandscapeParams& params() const { return params_; }
  const ScaleQuantities& scale() const { return scale_; }
  int n() const { return params_.n; }
  std::uint64_t size() const { return std::uint64_t{1} << params_.n; }
  Storage storage() const { return storage_; }

  double log_tau(std::uint64_t x) const {
    if (constant_) return *constant_;
    if (storage_ == Storage::Dense) return log_tau_[x];
    return generate(x);
  }
  double log_gamma(std::uint64_t x) const { return log_tau(x) - scale_.log_rn; }
  // Dense values; throws CapacityError for on-demand storage.
  const std::vector<double>& dense() const;

  void export_blob(const std::filesystem::path& blob) const;  // also writes <blob>.json
  static Landscape import_blob(const std::filesystem::path& blob);

 private:
  double generate(std::uint64_t x) const;

  LandscapeParams params_;
  ScaleQuantities scale_;
  Storage storage_ = Storage::Dense;
  std::uint64_t site_seed_ = 0;
  std::vector<double> log_tau_;
  std::optional<double> constant_;
};

}  // namespace remage
