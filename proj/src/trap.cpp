#include "remage/trap.hpp"

#include <cmath>

#include "clock_engine.hpp"
#include "remage/parallel.hpp"

namespace remage {

namespace {
constexpr double kZ95 = 1.959963984540054;
}

void TrapParams::validate() const {
  if (n_states < 2) throw std::invalid_argument("trap: need at least two states");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("trap: alpha must be in (0,1)");
}

TrapLandscape::TrapLandscape(const TrapParams& p) : params_(p), site_seed_(derive_seed(p.master_seed, Stream::Trap)) {
  p.validate();
}

ClockScaling trap_scaling(double a_n, double alpha) {
  if (!(a_n > 0.0)) throw std::invalid_argument("trap_scaling: a_n must be positive");
  return {a_n, std::log(a_n) / alpha};
}

ClockScaling default_trap_scaling(const TrapParams& p) {
  return trap_scaling(static_cast<double>(p.n_states), p.alpha);
}

std::uint64_t trap_step(std::uint64_t x, std::uint64_t n_states, Rng& rng) {
  const std::uint64_t y = rng.below(n_states - 1);
  return y >= x ? y + 1 : y;
}

ClockPath simulate_trap_clock(const TrapLandscape& L, const ClockScaling& sc, double horizon, Rng& rng,
                              const ClockOptions& opt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_trap_clock: horizon must be positive");
  ClockPath path;
  path.a_n = sc.a_n;
  path.log_c_n = sc.log_c_n;
  const std::uint64_t N = L.size();
  const double lc = sc.log_c_n;
  detail::run_clock(
      rng.below(N), [N](std::uint64_t x, Rng& r) { return trap_step(x, N, r); },
      [&L, lc](std::uint64_t x) { return L.log_tau(x) - lc; }, horizon, rng, opt.step_cap,
      [&](std::uint64_t, std::uint64_t x, double value) {
        path.values.push_back(value);
        if (opt.record_vertices) path.vertices.push_back(Vertex{x});
      });
  return path;
}

ClockPath simulate_trap_clock(const TrapParams& p, const ClockScaling& sc, double horizon, Rng& rng,
                              const ClockOptions& opt) {
  return simulate_trap_clock(TrapLandscape(p), sc, horizon, rng, opt);
}

double trap_nu(const TrapLandscape& L, double u, const ClockScaling& sc) {
  long double s = 0.0L;
  for (std::uint64_t x = 0; x < L.size(); ++x) s += std::exp(-u * std::exp(sc.log_c_n - L.log_tau(x)));
  return static_cast<double>(sc.a_n * s / static_cast<long double>(L.size()));
}

std::vector<CorrelationEstimate> trap_correlation_grid(const TrapCorrelationConfig& cfg) {
  if (cfg.n_env == 0 || cfg.n_chain == 0) throw std::invalid_argument("trap correlation: n_env * n_chain must be positive");
  cfg.params.validate();
  const auto grid = detail::make_grid(cfg.cells);
  const ClockScaling sc = cfg.scaling.value_or(default_trap_scaling(cfg.params));
  const std::uint64_t N = cfg.params.n_states;

  const std::size_t R = cfg.n_env * cfg.n_chain;
  std::vector<std::vector<std::uint8_t>> avoid(R);
  auto landscape_for = [&](std::size_t e, std::size_t c) {
    TrapParams p = cfg.params;
    p.master_seed = cfg.mode == Mode::Quenched ? derive_seed(cfg.master_seed, Stream::Trap, {e})
                                               : derive_seed(cfg.master_seed, Stream::Trap, {e, c});
    return TrapLandscape(p);
  };
  parallel_for(R, [&](std::size_t r) {
    const std::size_t e = r / cfg.n_chain, c = r % cfg.n_chain;
    const TrapLandscape L = landscape_for(e, c);
    Rng rng(derive_seed(cfg.master_seed, Stream::Chain, {e, c}));
    FirstAbove fa(grid.times);
    const double lc = sc.log_c_n;
    detail::run_clock(
        rng.below(N), [N](std::uint64_t x, Rng& g) { return trap_step(x, N, g); },
        [&L, lc](std::uint64_t x) { return L.log_tau(x) - lc; }, grid.horizon, rng, cfg.clock.step_cap,
        [&fa](std::uint64_t, std::uint64_t, double v) { fa.push(v); });
    detail::evaluate_cells(grid, cfg.cells, fa, avoid[r]);
  });

  std::vector<std::vector<std::uint32_t>> succ(cfg.n_env, std::vector<std::uint32_t>(cfg.cells.size(), 0));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < cfg.cells.size(); ++j) succ[r / cfg.n_chain][j] += avoid[r][j];
  return detail::aggregate(cfg.cells, succ, std::vector<bool>(cfg.n_env, true), cfg.n_chain, cfg.mode,
                           InitKind::Uniform, cfg.master_seed);
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cells)
    cs.push_back({{"t", c.t}, {"rho", c.rho}, {"p_rem", c.p_rem}, {"p_trap", c.p_trap}, {"diff", c.diff},
                  {"pooled_se", c.pooled_se}, {"within", c.within}});
  return {{"cells", cs}, {"all_within", all_within}};
}

ComparisonReport compare_models(const std::vector<CorrelationEstimate>& rem,
                                const std::vector<CorrelationEstimate>& trap) {
  if (rem.size() != trap.size()) throw GridMismatch("compare_models: grids differ in size");
  ComparisonReport rep;
  for (std::size_t i = 0; i < rem.size(); ++i) {
    const auto& a = rem[i];
    const auto& b = trap[i];
    if (std::abs(a.t - b.t) > 1e-12 || std::abs(a.rho - b.rho) > 1e-12)
      throw GridMismatch("compare_models: cell " + std::to_string(i) + " has different (t, rho)");
    ComparisonCell c;
    c.t = a.t;
    c.rho = a.rho;
    c.p_rem = a.p_hat;
    c.p_trap = b.p_hat;
    c.diff = a.p_hat - b.p_hat;
    const double sa = a.ci_half_width / kZ95, sb = b.ci_half_width / kZ95;
    c.pooled_se = std::sqrt(sa * sa + sb * sb);
    c.within = std::abs(c.diff) <= 3.0 * c.pooled_se;
    rep.all_within = rep.all_within && c.within;
    rep.cells.push_back(c);
  }
  return rep;
}

}  // namespace remage
