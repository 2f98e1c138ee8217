#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "remage/clock.hpp"
#include "remage/parallel.hpp"
#include "remage/stats.hpp"

using namespace remage;

namespace {

ClockPath path_of(std::vector<double> values) {
  ClockPath p;
  p.values = std::move(values);
  return p;
}

CorrelationConfig small_config(Mode mode) {
  CorrelationConfig cfg;
  cfg.params = LandscapeParams{10, 2.0 * beta_c(0.5), EpsilonScale{0.5}, 0};
  cfg.cells = {{0.5, 0.5}, {0.5, 1.0}, {0.5, 2.0}, {1.0, 1.0}, {0.0, 1.0}};
  cfg.n_env = 4;
  cfg.n_chain = 100;
  cfg.mode = mode;
  cfg.master_seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("unit landscape clock obeys the law of large numbers") {
  const auto L = Landscape::constant(10, 0.0);
  const ClockScaling sc{1e4, std::log(1e4)};
  Accumulator acc;
  for (int r = 0; r < 2000; ++r) {
    Rng rng(derive_seed(5, Stream::Chain, {static_cast<std::uint64_t>(r)}));
    const auto p = simulate_clock(L, {}, 1.2, sc, rng);
    acc.add(p.at(1.0));
  }
  CHECK(std::abs(acc.mean() - 1.0) <= 0.01);
}

TEST_CASE("clock values are increasing and exceed the horizon at the end") {
  const auto L = Landscape::sample({12, 1.0, EpsilonScale{0.5}, 3});
  Rng rng(1);
  ClockOptions opt;
  opt.record_vertices = true;
  const auto sc = ClockScaling::canonical(L.scale());
  const auto p = simulate_clock(L, {}, 2.0, sc, rng, opt);
  CHECK(p.values.back() > 2.0);
  CHECK(p.values.size() == p.vertices.size());
  for (std::size_t k = 1; k < p.values.size(); ++k) {
    CHECK(p.values[k] > p.values[k - 1]);
    CHECK(dist(p.vertices[k], p.vertices[k - 1]) == 1);
  }
  CHECK(p.values[p.values.size() - 2] <= 2.0);
}

TEST_CASE("conditional mean on a frozen skeleton") {
  const auto L = Landscape::sample({10, 0.8, EpsilonScale{0.5}, 4});
  Rng rng(2);
  const auto J = simulate_skeleton(L, {}, 200, rng);
  const ClockScaling sc{1.0, 3.0};
  double expect = 0.0;
  for (Vertex v : J) expect += std::exp(L.log_tau(v.bits) - sc.log_c_n);
  Accumulator acc;
  for (int r = 0; r < 10000; ++r) acc.add(clock_on_skeleton(L, J, sc, rng).values.back());
  CHECK(std::abs(acc.mean() - expect) <= 5.0 * acc.std_error());
}

TEST_CASE("normalised increments are uncorrelated") {
  const auto L = Landscape::sample({10, 1.0, EpsilonScale{0.5}, 5});
  Rng rng(3);
  const auto J = simulate_skeleton(L, {}, 100000, rng);
  const auto p = clock_on_skeleton(L, J, ClockScaling{1.0, 0.0}, rng);
  std::vector<double> e(p.values.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    e[k] = (p.values[k] - prev) / std::exp(L.log_tau(J[k].bits));
    prev = p.values[k];
  }
  const auto mv = mean_var(e);
  double c = 0.0;
  for (std::size_t k = 1; k < e.size(); ++k) c += (e[k] - mv.mean) * (e[k - 1] - mv.mean);
  c /= (e.size() - 1) * mv.var;
  CHECK(std::abs(c) <= 5.0 / std::sqrt(static_cast<double>(e.size())));
  CHECK(mv.mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform start keeps the walk uniform") {
  const auto L = Landscape::constant(8, 0.0);
  for (std::uint64_t j : {1, 5, 50}) {
    std::vector<double> counts(256, 0.0);
    Rng rng(j);
    const int reps = j == 50 ? 200000 : 1000000;
    for (int r = 0; r < reps; ++r) {
      Vertex v{rng.below(256)};
      for (std::uint64_t k = 0; k < j; ++k) v = step(v, 8, rng);
      counts[v.bits] += 1.0;
    }
    const std::vector<double> expect(256, reps / 256.0);
    CHECK(chi_square(counts, expect).p_value > 1e-4);
  }
}

TEST_CASE("range avoidance uses the open interval") {
  const auto p = path_of({0.1, 1.0, 3.0, 5.0});
  CHECK(range_avoids(p, 1.0, 0.0));
  CHECK(range_avoids(p, 1.0, 2.0));   // points at both endpoints, none inside
  CHECK_FALSE(range_avoids(p, 0.5, 1.0));
  CHECK(range_avoids(p, 1.5, 1.5));
  CHECK_FALSE(range_avoids(p, 1.5, 1.6));
  CHECK_THROWS_AS(range_avoids(p, 4.0, 2.0), HorizonError);

  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v;
    double x = 0.0;
    while (x < 10.0) v.push_back(x += rng.exponential());
    const auto q = path_of(v);
    const double t = 4.0 * rng.uniform(), s = 3.0 * rng.uniform();
    if (range_avoids(q, t, s + 1.0)) CHECK(range_avoids(q, t, s));

    FirstAbove fa({t});
    for (double y : v) fa.push(y);
    CHECK(avoids_from_first_above(fa.at(0), t, s) == range_avoids(q, t, s));
  }
}

TEST_CASE("constant deep traps: one jump clears the window") {
  // tau = e^10 against c_n = 1, so the first holding time is far beyond t + s.
  const auto L = Landscape::constant(12, 10.0);
  const ClockScaling sc{1.0, 0.0};
  int avoid = 0;
  const int reps = 5000;
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_seed(8, Stream::Chain, {static_cast<std::uint64_t>(r)}));
    avoid += range_avoids(simulate_clock(L, {}, 2.0, sc, rng), 0.5, 0.5);
  }
  CHECK(avoid / double(reps) >= 0.99);
}

TEST_CASE("correlation grid: monotone in rho, reproducible, thread independent") {
  auto cfg = small_config(Mode::Quenched);
  set_thread_count(1);
  const auto a = estimate_correlation_grid(cfg);
  set_thread_count(4);
  const auto b = estimate_correlation_grid(cfg);
  set_thread_count(0);
  REQUIRE(a.size() == cfg.cells.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p_hat == b[i].p_hat);
    CHECK(a[i].ci_half_width == b[i].ci_half_width);
    CHECK(a[i].env_p_hat == b[i].env_p_hat);
    CHECK(a[i].p_hat >= 0.0);
    CHECK(a[i].p_hat <= 1.0);
    CHECK(a[i].ci_half_width >= 0.0);
    CHECK(a[i].env_p_hat.size() == cfg.n_env);
  }
  // Common random numbers: nested windows at t = 0.5.
  CHECK(a[0].p_hat >= a[1].p_hat);
  CHECK(a[1].p_hat >= a[2].p_hat);
  for (std::size_t e = 0; e < cfg.n_env; ++e) CHECK(a[0].env_p_hat[e] >= a[2].env_p_hat[e]);
  CHECK(a[4].s == 1.0);  // t = 0 convention: window (0, rho)

  auto single = estimate_correlation(cfg.params, 0.5, 1.0, ClockScaling::canonical(compute_scale(cfg.params)),
                                     cfg.n_env, cfg.n_chain, Mode::Quenched, {}, cfg.master_seed);
  CHECK(single.p_hat == a[1].p_hat);
}

TEST_CASE("annealed mode") {
  auto cfg = small_config(Mode::Annealed);
  const auto a = estimate_correlation_grid(cfg);
  const auto b = estimate_correlation_grid(cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p_hat == b[i].p_hat);
    CHECK(a[i].env_p_hat.empty());
  }
  CHECK(a[0].p_hat >= a[2].p_hat);
}

TEST_CASE("bad configurations") {
  auto cfg = small_config(Mode::Quenched);
  cfg.n_env = 0;
  CHECK_THROWS_AS(estimate_correlation_grid(cfg), std::invalid_argument);
  cfg = small_config(Mode::Quenched);
  cfg.cells.clear();
  CHECK_THROWS_AS(estimate_correlation_grid(cfg), std::invalid_argument);
  cfg = small_config(Mode::Quenched);
  cfg.clock.step_cap = 5;
  CHECK_THROWS_AS(estimate_correlation_grid(cfg), HorizonError);
  cfg.tolerate_failures = true;
  CHECK_THROWS_AS(estimate_correlation_grid(cfg), std::runtime_error);  // every environment failed
}

TEST_CASE("confidence half-widths") {
  CHECK(binomial_half_width(50, 100) == doctest::Approx(1.959963984540054 * 0.05));
  CHECK(binomial_half_width(0, 100) > 0.0);
  CHECK(binomial_half_width(100, 100) > 0.0);
  CHECK(binomial_half_width(0, 0) == 0.0);
}

TEST_CASE("gibbs measure") {
  const int n = 16;
  const LandscapeParams p{n, 2.0 * beta_c(1.0), EpsilonScale{1.0}, 11};
  const auto L = Landscape::sample(p);
  const auto g = gibbs_measure(L);
  const long double total = std::accumulate(g.begin(), g.end(), 0.0L);
  CHECK(static_cast<double>(total) == doctest::Approx(1.0).epsilon(1e-12));

  // Top-10 mass against a 50-digit sum.
  using mp = boost::multiprecision::cpp_bin_float_50;
  mp z = 0;
  for (double lt : L.dense()) z += boost::multiprecision::exp(mp(lt));
  std::vector<std::size_t> idx(g.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + 10, idx.end(), [&](auto a, auto b) { return g[a] > g[b]; });
  double top = 0.0;
  mp top_mp = 0;
  for (int k = 0; k < 10; ++k) {
    top += g[idx[k]];
    top_mp += boost::multiprecision::exp(mp(L.dense()[idx[k]]));
  }
  CHECK(top == doctest::Approx(static_cast<double>(top_mp / z)).epsilon(1e-12));

  const auto flat = Landscape::from_log_tau({8, 1.0, EpsilonScale{0.5}, 0}, std::vector<double>(256, 0.0));
  for (double w : gibbs_measure(flat)) CHECK(w == doctest::Approx(1.0 / 256).epsilon(1e-14));

  LandscapeOptions od;
  od.force_on_demand = true;
  CHECK_THROWS_AS(gibbs_measure(Landscape::sample(p, od)), CapacityError);
}

TEST_CASE("stationary start") {
  const LandscapeParams p{16, 2.0 * beta_c(1.0), EpsilonScale{1.0}, 0};
  const auto sc = ClockScaling::canonical(compute_scale(p));
  const auto zero = stationary_start_correlation(p, 1.0, 0.0, sc, 5, 20, 3);
  CHECK(zero.p_hat == 1.0);
  for (double v : zero.env_p_hat) CHECK(v == 1.0);

  const auto a = stationary_start_correlation(p, 1.0, 0.3, sc, 8, 30, 3);
  const auto b = stationary_start_correlation(p, 1.0, 0.9, sc, 8, 30, 3);
  CHECK(a.init == InitKind::Gibbs);
  CHECK(mean_var(a.env_p_hat).var > 0.0);
  for (std::size_t e = 0; e < a.env_p_hat.size(); ++e) CHECK(a.env_p_hat[e] >= b.env_p_hat[e]);

  const LandscapeParams inter{16, 2.0 * beta_c(0.5), EpsilonScale{0.5}, 0};
  CHECK_THROWS_AS(stationary_start_correlation(inter, 1.0, 0.5, sc, 2, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(stationary_start_correlation(p, 1.0, 2.0, sc, 2, 2, 1), std::invalid_argument);
}

TEST_CASE("mode and init names") {
  CHECK(parse_mode(to_string(Mode::Annealed)) == Mode::Annealed);
  CHECK(parse_init(to_string(InitKind::Gibbs)) == InitKind::Gibbs);
  CHECK_THROWS_AS(parse_mode("frozen"), std::invalid_argument);
}
