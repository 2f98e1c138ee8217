#include "remage/clock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clock_engine.hpp"
#include "remage/parallel.hpp"
#include "remage/stats.hpp"

namespace remage {

namespace {
constexpr double kZ95 = 1.959963984540054;
}

std::string to_string(InitKind k) {
  switch (k) {
    case InitKind::Uniform: return "uniform";
    case InitKind::Gibbs: return "gibbs";
    case InitKind::Fixed: return "fixed";
  }
  return "?";
}

std::string to_string(Mode m) { return m == Mode::Quenched ? "quenched" : "annealed"; }

InitKind parse_init(const std::string& s) {
  if (s == "uniform") return InitKind::Uniform;
  if (s == "gibbs") return InitKind::Gibbs;
  if (s == "fixed") return InitKind::Fixed;
  throw std::invalid_argument("unknown init '" + s + "' (expected uniform|gibbs|fixed)");
}

Mode parse_mode(const std::string& s) {
  if (s == "quenched") return Mode::Quenched;
  if (s == "annealed") return Mode::Annealed;
  throw std::invalid_argument("unknown mode '" + s + "' (expected quenched|annealed)");
}

double ClockScaling::c_n() const { return std::exp(log_c_n); }

double ClockPath::at(double t) const {
  if (t < 0.0) throw std::domain_error("ClockPath::at: negative time");
  const double k = std::floor(a_n * t);
  if (k >= static_cast<double>(values.size())) throw HorizonError("ClockPath::at: time beyond simulated path");
  return values[static_cast<std::size_t>(k)];
}

InitSampler::InitSampler(const Landscape& L, const InitSpec& init) : n_(L.n()), init_(init) {
  if (init.kind == InitKind::Fixed && init.fixed.bits >= L.size())
    throw std::invalid_argument("init: fixed vertex outside the cube");
  if (init.kind == InitKind::Gibbs) {
    const auto g = gibbs_measure(L);
    cdf_.resize(g.size());
    std::partial_sum(g.begin(), g.end(), cdf_.begin());
  }
}

Vertex InitSampler::draw(Rng& rng) const {
  switch (init_.kind) {
    case InitKind::Uniform: return Vertex{n_ == 64 ? rng() : rng.below(std::uint64_t{1} << n_)};
    case InitKind::Fixed: return init_.fixed;
    case InitKind::Gibbs: {
      const double u = rng.uniform() * cdf_.back();
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      return Vertex{static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1))};
    }
  }
  return {};
}

ClockPath simulate_clock(const Landscape& L, const InitSpec& init, double horizon, const ClockScaling& sc,
                         Rng& rng, const ClockOptions& opt) {
  if (!(sc.a_n > 0.0) || !std::isfinite(sc.log_c_n)) throw std::invalid_argument("simulate_clock: bad scaling");
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_clock: horizon must be positive");
  ClockPath path;
  path.a_n = sc.a_n;
  path.log_c_n = sc.log_c_n;
  const InitSampler sampler(L, init);
  const int n = L.n();
  const double lc = sc.log_c_n;
  detail::run_clock(
      sampler.draw(rng), [n](Vertex v, Rng& r) { return step(v, n, r); },
      [&L, lc](Vertex v) { return L.log_tau(v.bits) - lc; }, horizon, rng, opt.step_cap,
      [&](std::uint64_t, Vertex v, double value) {
        path.values.push_back(value);
        if (opt.record_vertices) path.vertices.push_back(v);
      });
  return path;
}

ClockPath clock_on_skeleton(const Landscape& L, const std::vector<Vertex>& skeleton, const ClockScaling& sc,
                            Rng& rng) {
  ClockPath path;
  path.a_n = sc.a_n;
  path.log_c_n = sc.log_c_n;
  path.vertices = skeleton;
  path.values.reserve(skeleton.size());
  double value = 0.0;
  for (Vertex v : skeleton) {
    value += std::exp(L.log_tau(v.bits) - sc.log_c_n) * rng.exponential();
    path.values.push_back(value);
  }
  return path;
}

std::vector<Vertex> simulate_skeleton(const Landscape& L, const InitSpec& init, std::uint64_t steps, Rng& rng) {
  const InitSampler sampler(L, init);
  std::vector<Vertex> out;
  out.reserve(steps + 1);
  Vertex v = sampler.draw(rng);
  out.push_back(v);
  for (std::uint64_t k = 0; k < steps; ++k) {
    v = step(v, L.n(), rng);
    out.push_back(v);
  }
  return out;
}

bool range_avoids(const ClockPath& path, double t, double s) {
  if (t < 0.0 || s < 0.0) throw std::domain_error("range_avoids: t and s must be nonnegative");
  if (s == 0.0) return true;
  if (path.values.empty() || path.values.back() < t + s)
    throw HorizonError("range_avoids: path ends before t+s");
  const auto it = std::upper_bound(path.values.begin(), path.values.end(), t);
  return avoids_from_first_above(*it, t, s);
}

FirstAbove::FirstAbove(std::vector<double> sorted_times)
    : times_(std::move(sorted_times)), first_(times_.size(), 0.0) {}

void FirstAbove::push(double value) {
  while (next_ < times_.size() && value > times_[next_]) first_[next_++] = value;
}

void FirstAbove::push_continuous(double /*from*/, double to) {
  while (next_ < times_.size() && times_[next_] < to) {
    first_[next_] = times_[next_];
    ++next_;
  }
}

std::size_t FirstAbove::index_of(double t) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin());
}

double binomial_half_width(double k, double n) {
  if (n <= 0.0) return 0.0;
  const double p = k / n;
  if (std::min(k, n - k) < 5.0) {
    const auto w = wilson_interval(k, n);
    return std::max(w.hi - p, p - w.lo);
  }
  return kZ95 * std::sqrt(p * (1.0 - p) / n);
}

namespace detail {

Grid make_grid(const std::vector<Cell>& cells) {
  if (cells.empty()) throw std::invalid_argument("correlation: empty (t, rho) grid");
  Grid g;
  for (const auto& c : cells) {
    if (!(c.t >= 0.0) || !(c.rho > 0.0)) throw std::invalid_argument("correlation: need t >= 0 and rho > 0");
    g.times.push_back(c.t);
  }
  std::sort(g.times.begin(), g.times.end());
  g.times.erase(std::unique(g.times.begin(), g.times.end()), g.times.end());
  for (const auto& c : cells) {
    g.time_of.push_back(static_cast<std::size_t>(std::lower_bound(g.times.begin(), g.times.end(), c.t) - g.times.begin()));
    // t = 0 uses the interval (0, rho); see estimate_correlation.
    const double s = c.t > 0.0 ? c.rho * c.t : c.rho;
    g.horizon = std::max(g.horizon, c.t + s);
  }
  return g;
}

void evaluate_cells(const Grid& g, const std::vector<Cell>& cells, const FirstAbove& fa,
                    std::vector<std::uint8_t>& avoid) {
  avoid.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double s = cells[c].t > 0.0 ? cells[c].rho * cells[c].t : cells[c].rho;
    avoid[c] = avoids_from_first_above(fa.at(g.time_of[c]), cells[c].t, s) ? 1 : 0;
  }
}

std::vector<CorrelationEstimate> aggregate(const std::vector<Cell>& cells,
                                           const std::vector<std::vector<std::uint32_t>>& successes,
                                           const std::vector<bool>& ok, std::size_t n_chain, Mode mode,
                                           InitKind init, std::uint64_t seed) {
  std::vector<CorrelationEstimate> out;
  std::size_t n_ok = 0;
  for (bool b : ok) n_ok += b ? 1 : 0;
  if (n_ok == 0) throw std::runtime_error("correlation: every environment failed");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CorrelationEstimate est;
    est.t = cells[c].t;
    est.rho = cells[c].rho;
    est.s = est.t > 0.0 ? est.rho * est.t : est.rho;
    est.mode = mode;
    est.init = init;
    est.n_env = n_ok;
    est.n_chain = n_chain;
    est.failed_env = ok.size() - n_ok;
    est.seed = seed;
    double k = 0.0;
    Accumulator acc;
    for (std::size_t e = 0; e < successes.size(); ++e) {
      if (!ok[e]) continue;
      k += successes[e][c];
      const double pe = static_cast<double>(successes[e][c]) / static_cast<double>(n_chain);
      if (mode == Mode::Quenched) est.env_p_hat.push_back(pe);
      acc.add(pe);
    }
    const double total = static_cast<double>(n_ok * n_chain);
    est.p_hat = k / total;
    if (mode == Mode::Quenched && n_ok >= 2 && std::min(k, total - k) >= 5.0) {
      est.ci_half_width = kZ95 * acc.std_error();
    } else {
      est.ci_half_width = binomial_half_width(k, total);
    }
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace detail

std::vector<CorrelationEstimate> estimate_correlation_grid(const CorrelationConfig& cfg) {
  if (cfg.n_env == 0 || cfg.n_chain == 0) throw std::invalid_argument("correlation: n_env * n_chain must be positive");
  cfg.params.validate();
  const auto grid = detail::make_grid(cfg.cells);
  const ScaleQuantities sq = compute_scale(cfg.params);
  const ClockScaling sc = cfg.scaling.value_or(ClockScaling::canonical(sq));
  const int n = cfg.params.n;

  std::vector<std::vector<std::uint32_t>> succ(cfg.n_env, std::vector<std::uint32_t>(cfg.cells.size(), 0));
  std::vector<bool> ok(cfg.n_env, true);

  // One chain: simulate to the horizon and record avoidance for every cell.
  auto run_chain = [&](const Landscape& L, const InitSampler& init, std::uint64_t seed,
                       std::vector<std::uint8_t>& avoid) {
    Rng rng(seed);
    FirstAbove fa(grid.times);
    const double lc = sc.log_c_n;
    detail::run_clock(
        init.draw(rng), [n](Vertex v, Rng& r) { return step(v, n, r); },
        [&L, lc](Vertex v) { return L.log_tau(v.bits) - lc; }, grid.horizon, rng, cfg.clock.step_cap,
        [&fa](std::uint64_t, Vertex, double value) { fa.push(value); });
    detail::evaluate_cells(grid, cfg.cells, fa, avoid);
  };

  if (cfg.mode == Mode::Quenched) {
    for (std::size_t e = 0; e < cfg.n_env; ++e) {
      LandscapeParams p = cfg.params;
      p.master_seed = derive_seed(cfg.master_seed, Stream::Landscape, {e});
      try {
        const Landscape L = Landscape::sample(p, cfg.landscape);
        const InitSampler init(L, cfg.init);
        std::vector<std::vector<std::uint8_t>> avoid(cfg.n_chain);
        parallel_for(cfg.n_chain, [&](std::size_t c) {
          run_chain(L, init, derive_seed(cfg.master_seed, Stream::Chain, {e, c}), avoid[c]);
        });
        for (const auto& a : avoid)
          for (std::size_t j = 0; j < a.size(); ++j) succ[e][j] += a[j];
      } catch (const HorizonError&) {
        if (!cfg.tolerate_failures) throw;
        ok[e] = false;
      }
    }
  } else {
    // Annealed: a fresh environment per replica, generated on demand unless
    // the initial law needs the whole landscape.
    LandscapeOptions lo = cfg.landscape;
    lo.force_on_demand = cfg.init.kind != InitKind::Gibbs;
    std::vector<std::vector<std::uint8_t>> avoid(cfg.n_env * cfg.n_chain);
    std::vector<std::uint8_t> failed(cfg.n_env * cfg.n_chain, 0);
    parallel_for(cfg.n_env * cfg.n_chain, [&](std::size_t r) {
      const std::size_t e = r / cfg.n_chain, c = r % cfg.n_chain;
      LandscapeParams p = cfg.params;
      p.master_seed = derive_seed(cfg.master_seed, Stream::Landscape, {e, c});
      try {
        const Landscape L = Landscape::sample(p, lo);
        const InitSampler init(L, cfg.init);
        run_chain(L, init, derive_seed(cfg.master_seed, Stream::Chain, {e, c}), avoid[r]);
      } catch (const HorizonError&) {
        if (!cfg.tolerate_failures) throw;
        failed[r] = 1;
      }
    });
    for (std::size_t e = 0; e < cfg.n_env; ++e) {
      ok[e] = std::none_of(failed.begin() + e * cfg.n_chain, failed.begin() + (e + 1) * cfg.n_chain,
                           [](std::uint8_t f) { return f != 0; });
      if (!ok[e]) continue;
      for (std::size_t c = 0; c < cfg.n_chain; ++c)
        for (std::size_t j = 0; j < cfg.cells.size(); ++j) succ[e][j] += avoid[e * cfg.n_chain + c][j];
    }
  }
  return detail::aggregate(cfg.cells, succ, ok, cfg.n_chain, cfg.mode, cfg.init.kind, cfg.master_seed);
}

CorrelationEstimate estimate_correlation(const LandscapeParams& params, double t, double rho,
                                         const ClockScaling& sc, std::size_t n_env, std::size_t n_chain,
                                         Mode mode, InitSpec init, std::uint64_t master_seed) {
  CorrelationConfig cfg;
  cfg.params = params;
  cfg.cells = {{t, rho}};
  cfg.scaling = sc;
  cfg.n_env = n_env;
  cfg.n_chain = n_chain;
  cfg.mode = mode;
  cfg.init = init;
  cfg.master_seed = master_seed;
  return estimate_correlation_grid(cfg).front();
}

std::vector<double> gibbs_measure(const Landscape& L) {
  const auto& lt = L.dense();
  const double mx = *std::max_element(lt.begin(), lt.end());
  std::vector<double> w(lt.size());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    w[i] = std::exp(lt[i] - mx);
    sum += w[i];
  }
  const double inv = static_cast<double>(1.0L / sum);
  for (double& x : w) x *= inv;
  return w;
}

CorrelationEstimate stationary_start_correlation(const LandscapeParams& params, double t, double s,
                                                 const ClockScaling& sc, std::size_t n_env, std::size_t n_chain,
                                                 std::uint64_t master_seed) {
  if (!(t > 0.0) || s < 0.0 || s > t) throw std::invalid_argument("stationary_start_correlation: need 0 <= s <= t");
  const auto cls = classify_scale(compute_scale(params));
  if (cls.kind != ScaleKind::Extreme)
    throw std::invalid_argument("stationary_start_correlation: requires an extreme space scale");
  if (s == 0.0) {
    CorrelationEstimate est;
    est.t = t;
    est.n_env = n_env;
    est.n_chain = n_chain;
    est.init = InitKind::Gibbs;
    est.p_hat = 1.0;
    est.env_p_hat.assign(n_env, 1.0);
    est.seed = master_seed;
    return est;
  }
  CorrelationConfig cfg;
  cfg.params = params;
  cfg.cells = {{t, s / t}};
  cfg.scaling = sc;
  cfg.n_env = n_env;
  cfg.n_chain = n_chain;
  cfg.mode = Mode::Quenched;
  cfg.init = {InitKind::Gibbs, {}};
  cfg.master_seed = master_seed;
  return estimate_correlation_grid(cfg).front();
}

}  // namespace remage
