#include "remage/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "remage/gaussian.hpp"
#include "remage/limits.hpp"
#include "remage/parallel.hpp"
#include "remage/rng.hpp"
#include "remage/stats.hpp"

namespace remage {

namespace {

// exp(-u / gamma) from log gamma, with the guards for gamma -> 0 and inf.
inline double boltzmann(double u, double log_gamma) {
  if (u == 0.0) return 1.0;
  const double r = u * std::exp(-log_gamma);
  return std::exp(-r);
}

std::vector<double> f_table(const Landscape& L, double u, double log_c) {
  const auto& lt = L.dense();
  std::vector<double> f(lt.size());
  for (std::size_t x = 0; x < lt.size(); ++x) f[x] = boltzmann(u, lt[x] - log_c);
  return f;
}

std::size_t steps_for(double t, double a_n) {
  if (t < 0.0) throw std::domain_error("chain sums: negative t");
  return static_cast<std::size_t>(std::floor(a_n * t));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

double h_u(const Landscape& L, Vertex y, double u, double log_c_n) {
  if (u < 0.0) throw std::domain_error("h_u: u must be nonnegative");
  double s = 0.0;
  for (int i = 0; i < L.n(); ++i) s += boltzmann(u, L.log_tau(flip(y, i).bits) - log_c_n);
  return s / L.n();
}

std::vector<double> h_table(const Landscape& L, double u, double log_c_n) {
  if (u < 0.0) throw std::domain_error("h_table: u must be nonnegative");
  const auto f = f_table(L, u, log_c_n);
  const int n = L.n();
  std::vector<double> h(f.size());
  for (std::size_t y = 0; y < f.size(); ++y) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += f[y ^ (std::size_t{1} << i)];
    h[y] = s / n;
  }
  return h;
}

double nu_chain(const std::vector<Vertex>& J, const std::vector<double>& h, double t, double a_n) {
  const std::size_t k = steps_for(t, a_n);
  if (J.size() < k) throw InsufficientSkeleton("nu_chain: skeleton shorter than floor(a_n t)");
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += h[J[j].bits];
  return s;
}

double sigma2_chain(const std::vector<Vertex>& J, const std::vector<double>& h, double t, double a_n) {
  const std::size_t k = steps_for(t, a_n);
  if (J.size() < k) throw InsufficientSkeleton("sigma2_chain: skeleton shorter than floor(a_n t)");
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += h[J[j].bits] * h[J[j].bits];
  return s;
}

double nu_chain(const std::vector<Vertex>& J, const Landscape& L, double u, double t, const ClockScaling& sc) {
  const std::size_t k = steps_for(t, sc.a_n);
  if (J.size() < k) throw InsufficientSkeleton("nu_chain: skeleton shorter than floor(a_n t)");
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += h_u(L, J[j], u, sc.log_c_n);
  return s;
}

double sigma2_chain(const std::vector<Vertex>& J, const Landscape& L, double u, double t, const ClockScaling& sc) {
  const std::size_t k = steps_for(t, sc.a_n);
  if (J.size() < k) throw InsufficientSkeleton("sigma2_chain: skeleton shorter than floor(a_n t)");
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double h = h_u(L, J[j], u, sc.log_c_n);
    s += h * h;
  }
  return s;
}

double nu_avg(const Landscape& L, double u, const ClockScaling& sc) {
  if (u < 0.0) throw std::domain_error("nu_avg: u must be nonnegative");
  long double s = 0.0L;
  if (L.storage() == Storage::Dense) {
    for (double lt : L.dense()) s += boltzmann(u, lt - sc.log_c_n);
  } else {
    for (std::uint64_t x = 0; x < L.size(); ++x) s += boltzmann(u, L.log_tau(x) - sc.log_c_n);
  }
  return static_cast<double>(sc.a_n * s / static_cast<long double>(L.size()));
}

double sigma2_avg(const Landscape& L, double u, const ClockScaling& sc) {
  const auto h = h_table(L, u, sc.log_c_n);
  long double s = 0.0L;
  for (double v : h) s += v * v;
  return static_cast<double>(sc.a_n * s / static_cast<long double>(L.size()));
}

SampledValue nu_avg_sampled(const Landscape& L, double u, const ClockScaling& sc, std::size_t samples,
                            std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("nu_avg_sampled: need at least two samples");
  Rng rng(derive_seed(seed, Stream::Oracle, {1}));
  Accumulator acc;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t x = rng.below(L.size());
    acc.add(sc.a_n * boltzmann(u, L.log_tau(x) - sc.log_c_n));
  }
  return {acc.mean(), acc.variance() / static_cast<double>(samples)};
}

SampledValue sigma2_avg_sampled(const Landscape& L, double u, const ClockScaling& sc, std::size_t samples,
                                std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("sigma2_avg_sampled: need at least two samples");
  Rng rng(derive_seed(seed, Stream::Oracle, {2}));
  Accumulator acc;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vertex y{rng.below(L.size())};
    const double h = h_u(L, y, u, sc.log_c_n);
    acc.add(sc.a_n * h * h);
  }
  return {acc.mean(), acc.variance() / static_cast<double>(samples)};
}

double expected_nu(const ScaleQuantities& s, double u, const ClockScaling& sc) {
  if (!(u > 0.0)) return sc.a_n;
  // With f(y) = exp(-u/y): E f(gamma) = int f'(y) P(gamma > y) dy, and for
  // c_n = r_n, P(gamma > y) = h_n(y)/b_n. Substituting y = e^z the weight
  // u e^{-z} exp(-u e^{-z}) is a Gumbel density centred at log u.
  auto integrand = [&](double z) {
    const double w = u * std::exp(-z);
    const double tail = std::exp(log_gaussian_tail((sc.log_c_n + z) / s.beta_sqrt_n));
    return w * std::exp(-w) * tail;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lu = std::log(u);
  const double edges[] = {lu - 8.0, lu - 2.0, lu + 2.0, lu + 8.0, lu + 20.0, lu + 60.0};
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(edges); ++i) sum += GK::integrate(integrand, edges[i], edges[i + 1], 15, 1e-12);
  return sc.a_n * sum;
}

double a3_integral(const Landscape& L, double delta, const ClockScaling& sc) {
  if (!(delta > 0.0)) return 0.0;
  // int_0^delta exp(-u/g) du = g (1 - exp(-delta/g)); tends to delta as g -> inf.
  auto term = [delta](double log_g) {
    const double x = delta * std::exp(-log_g);
    if (x == 0.0) return delta;
    return -std::expm1(-x) * delta / x;
  };
  long double s = 0.0L;
  if (L.storage() == Storage::Dense) {
    for (double lt : L.dense()) s += term(lt - sc.log_c_n);
  } else {
    for (std::uint64_t x = 0; x < L.size(); ++x) s += term(L.log_tau(x) - sc.log_c_n);
  }
  return static_cast<double>(sc.a_n * s / static_cast<long double>(L.size()));
}

ThetaTerms theta_terms(const Landscape& L, double u, double t, const ClockScaling& sc, double rho_n, double c) {
  if (!(u > 0.0) || !(t > 0.0)) throw std::domain_error("theta_bound: u and t must be positive");
  const double k = std::floor(sc.a_n * t);
  const double ka = k / sc.a_n;
  const double nu = nu_avg(L, u, sc);
  const double n = L.n();
  ThetaTerms th;
  th.mixing = ka * ka * nu * nu / std::ldexp(1.0, L.n());
  th.variance = ka * sigma2_avg(L, u, sc);
  th.pairs = c * nu_avg(L, 2.0 * u, sc) / (n * n);
  const double enu = expected_nu(L.scale(), u, sc);
  th.bias = rho_n * enu * enu;
  return th;
}

double theta_bound(const Landscape& L, double u, double t, const ClockScaling& sc, double rho_n, double c) {
  return theta_terms(L, u, t, sc, rho_n, c).total();
}

nlohmann::json ConditionReport::to_json(bool include_samples) const {
  nlohmann::json j;
  j["t"] = t;
  j["u_grid"] = u_grid;
  j["delta_grid"] = delta_grid;
  j["scale"] = remage::to_json(scale);
  j["target_kind"] = target_kind;
  j["alpha"] = alpha;
  j["nu_chain_median"] = nu_chain_median;
  j["sigma2_chain_median"] = sigma2_chain_median;
  j["nu_avg"] = nu_avg;
  j["nu_avg_2u"] = nu_avg_2u;
  j["sigma2_avg"] = sigma2_avg;
  j["expected_nu"] = expected_nu;
  j["theta_bound"] = theta_bound;
  j["limit_target"] = limit_target;
  j["a0_value"] = a0_value;
  j["a3_integral"] = a3_integral;
  j["a3_envelope"] = a3_envelope;
  j["a3_eps"] = a3_eps;
  j["a1_max_deviation"] = a1_max_deviation;
  j["pass"] = {{"A0'", a0_pass}, {"A1", a1_pass}, {"A2", a2_pass}, {"A3", a3_pass}};
  if (include_samples) {
    j["nu_chain"] = nu_chain;
    j["sigma2_chain"] = sigma2_chain;
  }
  return j;
}

ConditionReport check_conditions(const LandscapeParams& params, double t, const std::vector<double>& u_grid,
                                 const std::vector<double>& delta_grid, const ConditionOptions& opt) {
  if (u_grid.empty() || delta_grid.empty()) throw std::invalid_argument("check_conditions: empty grid");
  if (!(t > 0.0)) throw std::invalid_argument("check_conditions: t must be positive");
  for (double u : u_grid)
    if (!(u > 0.0)) throw std::invalid_argument("check_conditions: u grid must be positive");

  ConditionReport r;
  r.t = t;
  r.u_grid = u_grid;
  r.delta_grid = delta_grid;
  const ScaleQuantities sq = compute_scale(params);
  r.scale = classify_scale(sq, opt.thresholds);
  const ClockScaling sc = opt.scaling.value_or(ClockScaling::canonical(sq));
  const double rho_n = opt.rho_n.value_or(1.0 / std::log(static_cast<double>(params.n)));

  // Target Levy tail for the scale class. Extreme scales use the order
  // statistics representation so the random target is coupled to the landscape.
  std::optional<Landscape> land;
  std::optional<PrmMarks> marks;
  switch (r.scale.kind) {
    case ScaleKind::Short:
      r.target_kind = "short";
      r.alpha = 0.0;
      land = Landscape::sample(params);
      break;
    case ScaleKind::Intermediate:
      r.target_kind = "intermediate";
      r.alpha = r.scale.alpha_eps;
      land = Landscape::sample(params);
      break;
    case ScaleKind::Extreme: {
      r.target_kind = "extreme";
      r.alpha = beta_c(1.0) / params.beta;
      if (!(r.alpha < 1.0)) throw std::invalid_argument("check_conditions: extreme scale needs beta > beta_c");
      const std::uint64_t lseed = derive_seed(params.master_seed, Stream::Lepage);
      land = lepage_landscape(params, lseed).as_landscape();
      marks = sample_prm_marks(r.alpha, opt.marks_K, lseed);
      break;
    }
  }
  const Landscape& L = *land;
  const double a = r.alpha;
  const double agamma = a > 0.0 ? a * std::tgamma(a) : 1.0;  // alpha Gamma(alpha) -> 1 as alpha -> 0

  auto target = [&](double u) {
    switch (r.scale.kind) {
      case ScaleKind::Short: return 1.0;
      case ScaleKind::Intermediate: return std::pow(u, -a) * agamma;
      case ScaleKind::Extreme: return nu_ext(*marks, r.scale.epsilon_prime.value_or(1.0), u).value;
    }
    return 0.0;
  };

  // Skeletons from the uniform law, shared across the u grid.
  const std::size_t k = steps_for(t, sc.a_n);
  std::vector<std::vector<Vertex>> skel(opt.skeletons);
  parallel_for(opt.skeletons, [&](std::size_t i) {
    Rng rng(derive_seed(opt.seed, Stream::Skeleton, {i}));
    skel[i] = simulate_skeleton(L, {InitKind::Uniform, {}}, k, rng);
  });

  bool a1 = true, a2 = true, a0 = true;
  for (double u : u_grid) {
    const auto h = h_table(L, u, sc.log_c_n);
    std::vector<double> nus(opt.skeletons), sig(opt.skeletons);
    for (std::size_t i = 0; i < opt.skeletons; ++i) {
      nus[i] = nu_chain(skel[i], h, t, sc.a_n);
      sig[i] = sigma2_chain(skel[i], h, t, sc.a_n);
    }
    const double tgt = target(u);
    const double med = median(nus);
    const double med_s = median(sig);
    const double nv = nu_avg(L, u, sc);
    r.nu_chain.push_back(std::move(nus));
    r.sigma2_chain.push_back(std::move(sig));
    r.nu_chain_median.push_back(med);
    r.sigma2_chain_median.push_back(med_s);
    r.nu_avg.push_back(nv);
    r.nu_avg_2u.push_back(nu_avg(L, 2.0 * u, sc));
    r.sigma2_avg.push_back(sigma2_avg(L, u, sc));
    r.expected_nu.push_back(expected_nu(sq, u, sc));
    r.theta_bound.push_back(theta_bound(L, u, t, sc, rho_n, opt.c_theta));
    r.limit_target.push_back(tgt);
    r.a0_value.push_back(nv / sc.a_n);
    const double dev = std::abs(med - t * tgt);
    r.a1_max_deviation = std::max(r.a1_max_deviation, dev);
    a1 = a1 && dev <= opt.a1_tol * std::max(1.0, t * tgt);
    a2 = a2 && med_s <= opt.a2_tol;
    a0 = a0 && nv / sc.a_n <= opt.a0_tol;
  }

  bool a3 = true;
  for (double d : delta_grid) {
    const double integral = a3_integral(L, d, sc);
    const double env = a < 1.0 ? opt.c0 * std::pow(d, 1.0 - a) * agamma / (1.0 - a)
                               : std::numeric_limits<double>::infinity();
    r.a3_integral.push_back(integral);
    r.a3_envelope.push_back(env);
    r.a3_eps.push_back(integral / t);
    a3 = a3 && integral <= env;
  }
  r.a0_pass = a0;
  r.a1_pass = a1;
  r.a2_pass = a2;
  r.a3_pass = a3;
  return r;
}

}  // namespace remage
