#include "remage/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "remage/parallel.hpp"

namespace remage {

double asl_cdf(double alpha, double u) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("asl_cdf: alpha must be in (0,1)");
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("asl_cdf: u must be in [0,1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  return boost::math::ibeta(alpha, 1.0 - alpha, u);
}

double PrmMarks::sum() const {
  // Smallest first for a tighter sum.
  long double s = 0.0L;
  for (auto it = gamma.rbegin(); it != gamma.rend(); ++it) s += *it;
  return static_cast<double>(s);
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must be in (0,1)");
}

// Upper incomplete gamma Gamma(a, x) for a in (-1, 1), a != 0.
double upper_gamma(double a, double x) {
  if (a > 0.0) return boost::math::tgamma(a, x);
  // Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a
  return (boost::math::tgamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

}  // namespace

PrmMarks sample_prm_marks(double alpha, std::size_t K, std::uint64_t seed) {
  check_alpha(alpha);
  if (K == 0) throw std::invalid_argument("sample_prm_marks: K must be >= 1");
  PrmMarks m;
  m.alpha = alpha;
  m.seed = seed;
  m.Gamma.resize(K);
  m.gamma.resize(K);
  Rng rng(derive_seed(seed, Stream::Marks));
  double G = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    G += rng.exponential();
    m.Gamma[k] = G;
    m.gamma[k] = std::pow(G, -1.0 / alpha);
  }
  return m;
}

TruncatedValue nu_ext(const PrmMarks& marks, double eps_prime, double u) {
  if (!(u > 0.0)) throw std::domain_error("nu_ext: u must be positive");
  if (marks.gamma.empty()) throw std::invalid_argument("nu_ext: no marks");
  long double s = 0.0L;
  for (auto it = marks.gamma.rbegin(); it != marks.gamma.rend(); ++it) s += std::exp(-u / *it);
  const double a = marks.alpha;
  const double gK = marks.gamma_tail();
  TruncatedValue r;
  r.tail = eps_prime * a * std::pow(u, -a) * upper_gamma(a, u / gK);
  r.value = eps_prime * static_cast<double>(s) + r.tail;
  r.truncation_error = eps_prime * std::sqrt(a * std::pow(2.0 * u, -a) * upper_gamma(a, 2.0 * u / gK));
  r.warning = r.truncation_error > 1e-6 * r.value;
  return r;
}

TruncatedValue c_sta(const PrmMarks& marks, double s) {
  if (!(s >= 0.0)) throw std::domain_error("c_sta: s must be nonnegative");
  if (marks.gamma.empty()) throw std::invalid_argument("c_sta: no marks");
  const double a = marks.alpha;
  const double gK = marks.gamma_tail();
  const double den_tail = a * std::pow(gK, 1.0 - a) / (1.0 - a);
  const double den = marks.sum() + den_tail;
  TruncatedValue r;
  if (s == 0.0) {
    r.value = 1.0;
    r.tail = den_tail / den;
  } else {
    long double num = 0.0L;
    for (auto it = marks.gamma.rbegin(); it != marks.gamma.rend(); ++it) num += *it * std::exp(-s / *it);
    const double num_tail = a * std::pow(s, 1.0 - a) * upper_gamma(a - 1.0, s / gK);
    r.value = (static_cast<double>(num) + num_tail) / den;
    r.tail = num_tail / den;
  }
  // The denominator tail is the largest unsampled contribution.
  r.truncation_error = den_tail / den;
  r.warning = r.truncation_error > 1e-6 * r.value;
  return r;
}

namespace {

std::vector<double> partial_sums(std::uint64_t seed, std::size_t count) {
  Rng rng(derive_seed(seed, Stream::Marks));
  std::vector<double> G(count);
  double acc = 0.0;
  for (auto& g : G) g = (acc += rng.exponential());
  return G;
}

}  // namespace

LepageLandscape lepage_landscape(const LandscapeParams& params, std::uint64_t seed) {
  if (params.n > 26) throw CapacityError("lepage_landscape: n above 26");
  LepageLandscape out;
  out.params = params;
  out.scale = compute_scale(params);
  const std::size_t N = std::size_t{1} << params.n;
  out.Gamma = partial_sums(seed, N + 1);
  const double logG = std::log(out.Gamma[N]);
  out.log_gamma.resize(N);
  for (std::size_t k = 0; k < N; ++k)
    out.log_gamma[k] = log_g_at_log_prob(std::log(out.Gamma[k]) - logG, out.scale);

  out.label.resize(N);
  std::iota(out.label.begin(), out.label.end(), std::uint64_t{0});
  Rng rng(derive_seed(seed, Stream::Labelling));
  for (std::size_t i = N - 1; i > 0; --i) std::swap(out.label[i], out.label[rng.below(i + 1)]);
  return out;
}

Landscape LepageLandscape::as_landscape() const {
  std::vector<double> log_tau(log_gamma.size());
  for (std::size_t k = 0; k < log_gamma.size(); ++k) log_tau[label[k]] = log_gamma[k] + scale.log_rn;
  return Landscape::from_log_tau(params, std::move(log_tau));
}

std::vector<double> lepage_top(const LandscapeParams& params, std::uint64_t seed, std::size_t k) {
  const ScaleQuantities sq = compute_scale(params);
  const std::size_t N = std::size_t{1} << params.n;
  k = std::min(k, N);
  Rng rng(derive_seed(seed, Stream::Marks));
  std::vector<double> G(k);
  double acc = 0.0;
  for (std::size_t i = 0; i < N + 1; ++i) {
    acc += rng.exponential();
    if (i < k) G[i] = acc;
  }
  const double logG = std::log(acc);
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = log_g_at_log_prob(std::log(G[i]) - logG, sq);
  return out;
}

SubordinatorSpec SubordinatorSpec::stable(double alpha, double c) {
  check_alpha(alpha);
  SubordinatorSpec s;
  s.kind_ = Kind::Stable;
  s.alpha_ = alpha;
  s.c_ = c > 0.0 ? c : alpha * std::tgamma(alpha);
  return s;
}

SubordinatorSpec SubordinatorSpec::extreme(PrmMarks marks, double eps_prime) {
  if (!(eps_prime > 0.0 && eps_prime <= 1.0)) throw std::domain_error("extreme subordinator: eps' must be in (0,1]");
  if (marks.gamma.empty()) throw std::invalid_argument("extreme subordinator: no marks");
  SubordinatorSpec s;
  s.kind_ = Kind::ExtremeRandom;
  s.alpha_ = marks.alpha;
  s.marks_ = std::move(marks);
  s.eps_prime_ = eps_prime;
  return s;
}

double SubordinatorSpec::tail(double u) const {
  if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
  if (kind_ == Kind::Stable) return c_ * std::pow(u, -alpha_);
  return nu_ext(marks_, eps_prime_, u).value;
}

double SubordinatorSpec::small_jump_mean(double delta) const {
  if (!(delta > 0.0)) return 0.0;
  if (kind_ == Kind::Stable) return c_ * alpha_ * std::pow(delta, 1.0 - alpha_) / (1.0 - alpha_);
  long double s = 0.0L;
  for (auto it = marks_.gamma.rbegin(); it != marks_.gamma.rend(); ++it) {
    const double g = *it, x = delta / g;
    s += g * (-std::expm1(-x) - x * std::exp(-x));
  }
  // Marks below gamma_K are all far under delta; each contributes about gamma.
  const double gK = marks_.gamma_tail();
  const double tail = alpha_ * std::pow(gK, 1.0 - alpha_) / (1.0 - alpha_);
  return eps_prime_ * (static_cast<double>(s) + tail);
}

SubordinatorSpec::JumpSampler::JumpSampler(const SubordinatorSpec& spec, double delta)
    : spec_(&spec), delta_(delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("subordinator: cutoff must be positive");
  if (spec.kind_ == Kind::Stable) {
    rate_ = spec.tail(delta);
  } else {
    cdf_.resize(spec.marks_.K());
    long double acc = 0.0L;
    for (std::size_t k = 0; k < cdf_.size(); ++k) {
      acc += std::exp(-delta / spec.marks_.gamma[k]);
      cdf_[k] = static_cast<double>(acc);
    }
    rate_ = spec.eps_prime_ * static_cast<double>(acc);
  }
  if (!std::isfinite(rate_)) throw std::domain_error("subordinator: nu(delta_cut, inf) is not finite");
}

double SubordinatorSpec::JumpSampler::draw(Rng& rng) const {
  if (spec_->kind_ == Kind::Stable) return delta_ * std::pow(rng.uniform(), -1.0 / spec_->alpha_);
  const double u = rng.uniform() * cdf_.back();
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin()),
                                       cdf_.size() - 1);
  // Exponential jump of scale gamma_k conditioned above delta.
  return delta_ + spec_->marks_.gamma[k] * rng.exponential();
}

double JumpPath::value_at(double t) const {
  double v = drift * t;
  for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) v += sizes[i];
  return v;
}

JumpPath simulate_subordinator(const SubordinatorSpec& spec, double T, double delta_cut, Rng& rng, bool compensate) {
  if (!(T > 0.0)) throw std::invalid_argument("simulate_subordinator: T must be positive");
  const SubordinatorSpec::JumpSampler sampler(spec, delta_cut);
  JumpPath p;
  p.horizon = T;
  p.drift = compensate ? spec.small_jump_mean(delta_cut) : 0.0;
  if (sampler.rate() <= 0.0) return p;
  double time = 0.0;
  for (;;) {
    time += rng.exponential() / sampler.rate();
    if (time > T) break;
    p.times.push_back(time);
    p.sizes.push_back(sampler.draw(rng));
  }
  return p;
}

std::vector<CorrelationEstimate> overshoot_correlation_cutoffs(const SubordinatorSpec& spec, double t, double rho,
                                                               std::size_t replicas, std::uint64_t seed,
                                                               const std::vector<double>& cutoffs, bool compensate) {
  if (!(t >= 0.0) || !(rho > 0.0)) throw std::invalid_argument("overshoot: need t >= 0 and rho > 0");
  if (replicas == 0) throw std::invalid_argument("overshoot: replicas must be positive");
  if (cutoffs.empty()) throw std::invalid_argument("overshoot: no cutoffs");
  const double s = t > 0.0 ? rho * t : rho;
  const double level = t + s;
  const std::size_t J = cutoffs.size();
  const double dmin = *std::min_element(cutoffs.begin(), cutoffs.end());
  const SubordinatorSpec::JumpSampler sampler(spec, dmin);
  if (!(sampler.rate() > 0.0)) throw std::domain_error("overshoot: no jumps above the cutoff");
  std::vector<double> drift(J);
  for (std::size_t j = 0; j < J; ++j) drift[j] = compensate ? spec.small_jump_mean(cutoffs[j]) : 0.0;
  const std::uint64_t max_jumps = 100'000'000ULL;

  std::vector<std::vector<std::uint8_t>> avoid(replicas, std::vector<std::uint8_t>(J, 0));
  parallel_for(replicas, [&](std::size_t r) {
    Rng rng(derive_seed(seed, Stream::Subordinator, {r}));
    std::vector<double> x(J, 0.0);
    std::vector<FirstAbove> fa(J, FirstAbove({t}));
    std::size_t done = 0;
    std::vector<std::uint8_t> finished(J, 0);
    for (std::uint64_t jumps = 0; done < J; ++jumps) {
      if (jumps >= max_jumps) throw HorizonError("overshoot: jump cap reached before the level");
      const double dt = rng.exponential() / sampler.rate();
      const double xi = sampler.draw(rng);
      for (std::size_t j = 0; j < J; ++j) {
        if (finished[j]) continue;
        if (drift[j] > 0.0) {
          const double nx = x[j] + drift[j] * dt;
          fa[j].push_continuous(x[j], nx);
          x[j] = nx;
        }
        if (xi >= cutoffs[j]) {
          x[j] += xi;
          fa[j].push(x[j]);
        }
        if (x[j] > level) {
          finished[j] = 1;
          ++done;
        }
      }
    }
    for (std::size_t j = 0; j < J; ++j) avoid[r][j] = avoids_from_first_above(fa[j].at(0), t, s) ? 1 : 0;
  });

  std::vector<CorrelationEstimate> out(J);
  for (std::size_t j = 0; j < J; ++j) {
    double k = 0.0;
    for (const auto& a : avoid) k += a[j];
    auto& e = out[j];
    e.t = t;
    e.rho = rho;
    e.s = s;
    e.p_hat = k / static_cast<double>(replicas);
    e.ci_half_width = binomial_half_width(k, static_cast<double>(replicas));
    e.n_env = 1;
    e.n_chain = replicas;
    e.mode = Mode::Annealed;
    e.seed = seed;
  }
  return out;
}

CorrelationEstimate overshoot_correlation(const SubordinatorSpec& spec, double t, double rho, std::size_t replicas,
                                          std::uint64_t seed, const OvershootOptions& opt) {
  const double base = t > 0.0 ? t : rho;
  const double delta = opt.delta_cut > 0.0 ? opt.delta_cut : 1e-4 * base;
  return overshoot_correlation_cutoffs(spec, t, rho, replicas, seed, {delta}, opt.compensate).front();
}

}  // namespace remage
