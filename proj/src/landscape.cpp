#include "remage/landscape.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

#include "remage/gaussian.hpp"
#include "remage/rng.hpp"

namespace remage {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double bn_residual(double B, double log_b) {
  return log_b - 0.5 * B * B - kLogSqrt2Pi - std::log(B);
}

}  // namespace

void LandscapeParams::validate() const {
  if (n < 2) throw std::invalid_argument("landscape: n must be >= 2");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("landscape: beta must be > 0");
  if (const auto* e = std::get_if<ExplicitScale>(&scale)) {
    if (!(e->log_rn > 0.0) || !std::isfinite(e->log_rn))
      throw std::invalid_argument("landscape: r_n must exceed 1");
  } else {
    const double eps = std::get<EpsilonScale>(scale).epsilon;
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("landscape: epsilon must be in (0,1]");
  }
}

double ScaleQuantities::b_n() const { return std::exp(log_bn); }
double ScaleQuantities::r_n() const { return std::exp(log_rn); }

double hall_surrogate(double log_bn) {
  if (!(log_bn > 1.0)) throw UnsolvableError("hall_surrogate: needs log b > 1");
  const double s = std::sqrt(2.0 * log_bn);
  return s - 0.5 * (std::log(log_bn) + std::log(4.0 * std::numbers::pi)) / s;
}

BnSolution solve_Bn(double b_n) {
  if (!(b_n > 0.0) || !std::isfinite(b_n))
    throw UnsolvableError("solve_Bn: b_n must be positive and finite");
  return solve_Bn_log(std::log(b_n));
}

BnSolution solve_Bn_log(double log_b) {
  if (!std::isfinite(log_b)) throw UnsolvableError("solve_Bn: log b_n not finite");
  auto f = [log_b](double B) { return bn_residual(B, log_b); };

  // Bracket from the Hall surrogate when it is defined and brackets the root;
  // otherwise a bracket that always works.
  double lo = 0.0, hi = 0.0;
  bool have = false;
  if (log_b > 1.0) {
    const double Bh = hall_surrogate(log_b);
    if (Bh > 0.0) {
      const double A = 1.0 / Bh;
      lo = std::max(Bh - 5.0 * A, std::numeric_limits<double>::min());
      hi = Bh + 5.0 * A;
      have = f(lo) > 0.0 && f(hi) < 0.0;
    }
  }
  if (!have) {
    lo = 0.5 * std::exp(-(std::abs(log_b) + 2.0));
    hi = std::sqrt(2.0 * std::max(log_b, 0.0)) + 1.0;
  }
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi),
                                                  boost::math::tools::eps_tolerance<double>(50), iters);
  double B = 0.5 * (a + b);
  // Newton polish: f'(B) = -B - 1/B.
  for (int k = 0; k < 3; ++k) B -= f(B) / (-B - 1.0 / B);
  if (!(B > 0.0)) throw UnsolvableError("solve_Bn: no positive root");
  return {B, 1.0 / B};
}

double log_Gn(double log_u, const ScaleQuantities& s) {
  return log_gaussian_tail(log_u / s.beta_sqrt_n);
}

double log_Gn_inverse(double log_p, const ScaleQuantities& s) {
  return s.beta_sqrt_n * inverse_log_gaussian_tail(log_p);
}

double h_n(double v, const ScaleQuantities& s) {
  if (!(v > 0.0)) throw std::domain_error("h_n: v must be positive");
  return std::exp(s.log_bn + log_Gn(s.log_rn + std::log(v), s));
}

double log_g_at_log_prob(double log_p, const ScaleQuantities& s) {
  if (log_p >= 0.0) return -std::numeric_limits<double>::infinity();
  return log_Gn_inverse(log_p, s) - s.log_rn;
}

double log_g_n(double u, const ScaleQuantities& s) {
  if (!(u > 0.0)) throw std::domain_error("g_n: u must be positive");
  return log_g_at_log_prob(std::log(u) - s.log_bn, s);
}

double g_n(double u, const ScaleQuantities& s) { return std::exp(log_g_n(u, s)); }

double beta_c(double epsilon) { return std::sqrt(2.0 * epsilon * std::numbers::ln2); }

double derive_log_rn_from_epsilon(int n, double beta, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in (0,1]");
  const double m = std::ceil(epsilon * n - 1e-9);
  const double x = inverse_log_gaussian_tail(-m * std::numbers::ln2);
  if (!std::isfinite(x)) throw std::runtime_error("derive_rn_from_epsilon: tail inverse failed");
  return beta * std::sqrt(static_cast<double>(n)) * x;
}

double derive_rn_from_epsilon(int n, double beta, double epsilon) {
  return std::exp(derive_log_rn_from_epsilon(n, beta, epsilon));
}

ScaleQuantities compute_scale(const LandscapeParams& p) {
  p.validate();
  ScaleQuantities s;
  s.n = p.n;
  s.beta = p.beta;
  s.beta_sqrt_n = p.beta * std::sqrt(static_cast<double>(p.n));
  if (const auto* e = std::get_if<ExplicitScale>(&p.scale)) {
    s.log_rn = e->log_rn;
    s.B_bar = s.log_rn / s.beta_sqrt_n;
    s.log_bn = -log_gaussian_tail(s.B_bar);
  } else {
    const double eps = std::get<EpsilonScale>(p.scale).epsilon;
    const double m = std::ceil(eps * p.n - 1e-9);
    s.log_bn = m * std::numbers::ln2;
    s.B_bar = inverse_log_gaussian_tail(-s.log_bn);
    s.log_rn = s.beta_sqrt_n * s.B_bar;
    if (!(s.log_rn > 0.0)) throw std::invalid_argument("landscape: derived r_n does not exceed 1");
  }
  s.m_n = s.log_bn / std::numbers::ln2;
  const auto sol = solve_Bn_log(s.log_bn);
  s.B_n = sol.B;
  s.A_n = sol.A;
  s.alpha_n = s.B_n / s.beta_sqrt_n;
  return s;
}

std::string to_string(ScaleKind k) {
  switch (k) {
    case ScaleKind::Short: return "short";
    case ScaleKind::Intermediate: return "intermediate";
    case ScaleKind::Extreme: return "extreme";
  }
  return "?";
}

ScaleClass classify_scale(const ScaleQuantities& s, const ClassifyThresholds& th) {
  ScaleClass c;
  c.m_n = s.m_n;
  c.epsilon = s.m_n / s.n;
  c.alpha_n = s.alpha_n;
  c.alpha_eps = std::sqrt(c.epsilon * 2.0 * std::numbers::ln2) / s.beta;
  const double ratio = std::exp2(s.m_n - s.n);
  if (ratio >= th.extreme_min) {
    c.kind = ScaleKind::Extreme;
    c.epsilon_prime = std::min(ratio, 1.0);
  } else if (c.epsilon <= th.short_max) {
    c.kind = ScaleKind::Short;
  } else {
    c.kind = ScaleKind::Intermediate;
  }
  return c;
}

nlohmann::json to_json(const ScaleQuantities& s) {
  return {{"n", s.n},           {"beta", s.beta},       {"log_rn", s.log_rn}, {"log_bn", s.log_bn},
          {"m_n", s.m_n},       {"B_bar", s.B_bar},     {"B_n", s.B_n},       {"A_n", s.A_n},
          {"alpha_n", s.alpha_n}};
}

nlohmann::json to_json(const ScaleClass& c) {
  nlohmann::json j = {{"kind", to_string(c.kind)}, {"epsilon", c.epsilon}, {"m_n", c.m_n},
                      {"alpha_n", c.alpha_n},     {"alpha_eps", c.alpha_eps}};
  j["epsilon_prime"] = c.epsilon_prime ? nlohmann::json(*c.epsilon_prime) : nlohmann::json(nullptr);
  return j;
}

double site_gaussian(std::uint64_t seed, std::uint64_t x) {
  const double u = counter_uniform(seed, x);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

Landscape Landscape::sample(const LandscapeParams& p, const LandscapeOptions& opt) {
  Landscape L;
  L.params_ = p;
  L.scale_ = compute_scale(p);
  if (p.n > opt.hard_cap) throw CapacityError("landscape: n above hard cap " + std::to_string(opt.hard_cap));
  L.site_seed_ = derive_seed(p.master_seed, Stream::Landscape);
  if (opt.force_on_demand || p.n > opt.dense_limit) {
    L.storage_ = Storage::OnDemand;
    return L;
  }
  L.storage_ = Storage::Dense;
  L.log_tau_.resize(L.size());
  for (std::uint64_t x = 0; x < L.size(); ++x) L.log_tau_[x] = L.generate(x);
  return L;
}

double Landscape::generate(std::uint64_t x) const {
  return -scale_.beta_sqrt_n * site_gaussian(site_seed_, x);
}

Landscape Landscape::constant(int n, double log_tau_value) {
  if (n < 1 || n > 48) throw CapacityError("constant landscape: bad n");
  Landscape L;
  L.params_ = LandscapeParams{n, 1.0, ExplicitScale{1.0}, 0};
  L.scale_ = compute_scale(L.params_);
  L.constant_ = log_tau_value;
  if (n <= 24) {
    L.storage_ = Storage::Dense;
    L.log_tau_.assign(L.size(), log_tau_value);
  } else {
    L.storage_ = Storage::OnDemand;
  }
  return L;
}

Landscape Landscape::from_log_tau(const LandscapeParams& p, std::vector<double> log_tau) {
  Landscape L;
  L.params_ = p;
  L.scale_ = compute_scale(p);
  if (log_tau.size() != L.size()) throw std::invalid_argument("from_log_tau: size must be 2^n");
  L.storage_ = Storage::Dense;
  L.log_tau_ = std::move(log_tau);
  return L;
}

const std::vector<double>& Landscape::dense() const {
  if (storage_ != Storage::Dense) throw CapacityError("landscape: dense values unavailable for on-demand storage");
  return log_tau_;
}

namespace {
constexpr char kMagic[8] = {'R', 'E', 'M', 'A', 'G', 'E', '1', '\0'};

struct BlobHeader {
  char magic[8];
  std::uint32_t n;
  std::uint32_t reserved;
  double beta;
  double log_rn;
  std::uint64_t seed;
};
static_assert(sizeof(BlobHeader) == 40);
}  // namespace

void Landscape::export_blob(const std::filesystem::path& blob) const {
  const auto& values = dense();
  BlobHeader h{};
  std::memcpy(h.magic, kMagic, sizeof kMagic);
  h.n = static_cast<std::uint32_t>(params_.n);
  h.beta = params_.beta;
  h.log_rn = scale_.log_rn;
  h.seed = params_.master_seed;
  std::ofstream out(blob, std::ios::binary);
  if (!out) throw std::runtime_error("export_blob: cannot open " + blob.string());
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("export_blob: write failed");

  nlohmann::json side = {{"scale", to_json(scale_)}, {"class", to_json(classify_scale(scale_))},
                         {"seed", params_.master_seed}};
  std::ofstream js(blob.string() + ".json");
  js << side.dump(2) << '\n';
}

Landscape Landscape::import_blob(const std::filesystem::path& blob) {
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw std::runtime_error("import_blob: cannot open " + blob.string());
  BlobHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  if (!in || std::memcmp(h.magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("import_blob: bad header");
  if (h.n < 2 || h.n > 30) throw CapacityError("import_blob: n out of range");
  LandscapeParams p{static_cast<int>(h.n), h.beta, ExplicitScale{h.log_rn}, h.seed};
  std::vector<double> v(std::size_t{1} << h.n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw std::runtime_error("import_blob: truncated payload");
  return from_log_tau(p, std::move(v));
}

}  // namespace remage
