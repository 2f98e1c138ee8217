#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "remage/conditions.hpp"
#include "remage/gaussian.hpp"
#include "remage/stats.hpp"

using namespace remage;

namespace {

LandscapeParams eps_params(int n, double beta, double eps, std::uint64_t seed = 1) {
  return LandscapeParams{n, beta, EpsilonScale{eps}, seed};
}

// E exp(-u c / tau) with log tau = -beta sqrt(n) H, composite Simpson over H.
double simpson_expected_f(double beta_sqrt_n, double log_c, double u) {
  const double lo = -40.0, hi = 40.0;
  const int N = 400000;
  const double hstep = (hi - lo) / N;
  auto f = [&](double z) {
    return gaussian_density(z) * std::exp(-u * std::exp(beta_sqrt_n * z + log_c));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < N; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * hstep);
  return s * hstep / 3.0;
}

}  // namespace

TEST_CASE("h_u basics") {
  const auto L = Landscape::sample(eps_params(4, 1.0, 0.5, 3));
  const double lc = L.scale().log_rn;
  CHECK(h_u(L, Vertex{5}, 0.0, lc) == 1.0);
  CHECK_THROWS_AS(h_u(L, Vertex{0}, -1.0, lc), std::domain_error);

  // Brute force over the four neighbours.
  for (double u : {0.1, 1.0, 7.0}) {
    const auto tab = h_table(L, u, lc);
    for (std::uint64_t y = 0; y < 16; ++y) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += std::exp(-u * std::exp(lc - L.log_tau(y ^ (1u << i))));
      CHECK(std::abs(h_u(L, Vertex{y}, u, lc) - s / 4.0) <= 1e-14);
      CHECK(tab[y] == doctest::Approx(h_u(L, Vertex{y}, u, lc)).epsilon(1e-15));
    }
  }

  double prev = 1.0;
  for (double u = 0.01; u < 1e6; u *= 3.0) {
    const double h = h_u(L, Vertex{0}, u, lc);
    CHECK(h <= prev);
    prev = h;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("chain sums") {
  const auto L = Landscape::sample(eps_params(8, 1.0, 0.5, 5));
  const auto sc = ClockScaling::canonical(L.scale());
  const auto h = h_table(L, 1.0, sc.log_c_n);
  Rng rng(1);
  const std::size_t k = static_cast<std::size_t>(std::floor(sc.a_n * 2.0));
  const auto J = simulate_skeleton(L, {}, k, rng);

  CHECK(nu_chain(J, h, 0.5 / sc.a_n, sc.a_n) == 0.0);
  const double nu = nu_chain(J, h, 2.0, sc.a_n);
  const double s2 = sigma2_chain(J, h, 2.0, sc.a_n);
  CHECK(s2 <= nu);
  CHECK(nu == doctest::Approx(nu_chain(J, L, 1.0, 2.0, sc)).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(sigma2_chain(J, L, 1.0, 2.0, sc)).epsilon(1e-12));

  const std::vector<Vertex> short_J(3);
  CHECK_THROWS_AS(nu_chain(short_J, h, 2.0, sc.a_n), InsufficientSkeleton);
  CHECK_THROWS_AS(sigma2_chain(short_J, L, 1.0, 2.0, sc), InsufficientSkeleton);
  CHECK_THROWS_AS(nu_chain(J, h, -1.0, sc.a_n), std::domain_error);
}

TEST_CASE("stationary mean of the chain sum") {
  // Under the uniform start every J(j) is uniform, so E sum_j h(J(j)) = (k/a_n) nu_n.
  for (int n : {8, 12}) {
    const auto L = Landscape::sample(eps_params(n, 1.0, 0.5, 11));
    const auto sc = ClockScaling::canonical(L.scale());
    const double u = 0.7, t = 1.5;
    const auto h = h_table(L, u, sc.log_c_n);
    const std::size_t k = static_cast<std::size_t>(std::floor(sc.a_n * t));
    Accumulator acc;
    for (std::size_t i = 0; i < 10000; ++i) {
      Rng rng(derive_seed(99, Stream::Skeleton, {i}));
      acc.add(nu_chain(simulate_skeleton(L, {}, k, rng), h, t, sc.a_n));
    }
    const double expect = k / sc.a_n * nu_avg(L, u, sc);
    CHECK(std::abs(acc.mean() - expect) <= 5.0 * std::sqrt(acc.variance() / 10000.0));
  }
}

TEST_CASE("chain averages") {
  const auto L = Landscape::sample(eps_params(8, 1.2, 0.5, 7));
  const auto sc = ClockScaling::canonical(L.scale());
  CHECK(nu_avg(L, 0.0, sc) == doctest::Approx(sc.a_n));
  double prev = INFINITY;
  for (double u : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double v = nu_avg(L, u, sc);
    CHECK(v < prev);
    prev = v;
  }

  // sigma^2 by the explicit neighbour-pair expansion.
  const double u = 0.5;
  const int n = L.n();
  std::vector<double> f(L.size());
  for (std::uint64_t x = 0; x < L.size(); ++x) f[x] = std::exp(-u * std::exp(sc.log_c_n - L.log_tau(x)));
  double s = 0.0;
  for (std::uint64_t y = 0; y < L.size(); ++y)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += f[y ^ (1u << i)] * f[y ^ (1u << j)];
  const double brute = sc.a_n * s / (double(n) * n * L.size());
  CHECK(sigma2_avg(L, u, sc) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("variance decomposition over landscapes") {
  // E sigma^2(u) = E nu(2u)/n + (E nu(u))^2 (n-1)/(a_n n), exact in expectation.
  const int n = 12;
  const double u = 1.0;
  const auto sq = compute_scale(eps_params(n, 1.0, 0.5));
  const auto sc = ClockScaling::canonical(sq);
  Accumulator acc;
  for (std::uint64_t s = 0; s < 200; ++s) acc.add(sigma2_avg(Landscape::sample(eps_params(n, 1.0, 0.5, 1000 + s)), u, sc));
  const double e1 = expected_nu(sq, u, sc), e2 = expected_nu(sq, 2.0 * u, sc);
  const double expect = e2 / n + e1 * e1 * (n - 1) / (sc.a_n * n);
  CHECK(std::abs(acc.mean() - expect) <= 5.0 * std::sqrt(acc.variance() / 200.0));
}

TEST_CASE("sampled averages agree with exact ones") {
  const auto L = Landscape::sample(eps_params(14, 0.6, 0.5, 21));
  const auto sc = ClockScaling::canonical(L.scale());
  const double u = 1.0;
  const auto sn = nu_avg_sampled(L, u, sc, 200000, 3);
  CHECK(std::abs(sn.value - nu_avg(L, u, sc)) <= 4.0 * std::sqrt(sn.variance));
  const auto ss = sigma2_avg_sampled(L, u, sc, 50000, 3);
  CHECK(std::abs(ss.value - sigma2_avg(L, u, sc)) <= 4.0 * std::sqrt(ss.variance));
  CHECK_THROWS_AS(nu_avg_sampled(L, u, sc, 1, 3), std::invalid_argument);
}

TEST_CASE("expected nu against Gaussian quadrature") {
  for (auto [n, beta, eps] : {std::tuple{12, 1.0, 0.5}, {20, 2.0, 0.5}, {16, 1.5, 1.0}}) {
    const auto sq = compute_scale(eps_params(n, beta, eps));
    const auto sc = ClockScaling::canonical(sq);
    for (double u : {0.1, 1.0, 10.0}) {
      const double oracle = sc.a_n * simpson_expected_f(sq.beta_sqrt_n, sc.log_c_n, u);
      CHECK(expected_nu(sq, u, sc) == doctest::Approx(oracle).epsilon(1e-6));
    }
    CHECK(expected_nu(sq, 0.0, sc) == sc.a_n);
  }
}

TEST_CASE("A3 integral matches quadrature of nu") {
  const auto L = Landscape::sample(eps_params(10, 1.3, 0.5, 4));
  const auto sc = ClockScaling::canonical(L.scale());
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (double d : {0.01, 0.1, 1.0}) {
    // In log u the integrand is smooth; the piece below d e^-40 is at most a_n d e^-40.
    const double lo = std::log(d) - 40.0;
    auto g = [&](double w) { return nu_avg(L, std::exp(w), sc) * std::exp(w); };
    double q = sc.a_n * std::exp(lo);
    for (double w = lo; w < std::log(d) - 1e-12; w += 5.0)
      q += GK::integrate(g, w, std::min(w + 5.0, std::log(d)), 5, 1e-12);
    CHECK(a3_integral(L, d, sc) == doctest::Approx(q).epsilon(1e-8));
  }
  CHECK(a3_integral(L, 0.0, sc) == 0.0);
}

TEST_CASE("theta terms") {
  const auto L = Landscape::sample(eps_params(12, 1.0, 0.5, 8));
  const auto sc = ClockScaling::canonical(L.scale());
  const double u = 1.0, t = 1.0, rho = 1.0 / std::log(12.0);
  const auto th = theta_terms(L, u, t, sc, rho);
  CHECK(th.mixing >= 0.0);
  CHECK(th.variance == doctest::Approx(std::floor(sc.a_n * t) / sc.a_n * sigma2_avg(L, u, sc)));
  CHECK(th.pairs == doctest::Approx(10.0 * nu_avg(L, 2.0, sc) / 144.0));
  CHECK(th.bias == doctest::Approx(rho * std::pow(expected_nu(L.scale(), u, sc), 2)));
  CHECK(theta_bound(L, u, t, sc, rho) == doctest::Approx(th.total()));
  CHECK(th.total() >= th.variance);
  CHECK_THROWS_AS(theta_terms(L, 0.0, t, sc, rho), std::domain_error);

  // Averaged over landscapes the concentration bound shrinks with n.
  double prev = INFINITY;
  for (int n : {10, 12, 14, 16}) {
    double avg = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto M = Landscape::sample(eps_params(n, 1.0, 0.5, 50 + s));
      avg += theta_bound(M, u, t, ClockScaling::canonical(M.scale()), 1.0 / std::log(n)) / 5.0;
    }
    CHECK(avg < prev);
    prev = avg;
  }
}

TEST_CASE("short scale: nu and n sigma^2 are close to one") {
  // m_n = 19 at n = 24 and beta = 50; alpha_n is about 0.02. Only about
  // 2^{n-m} = 32 sites sit above r_n, so a single landscape carries
  // Poisson noise of relative size 1/sqrt(32) around E nu = 1.
  const auto L = Landscape::sample(eps_params(24, 50.0, 19.0 / 24.0, 2));
  const auto sc = ClockScaling::canonical(L.scale());
  CHECK(L.scale().alpha_n < 0.05);
  const double poisson_sd = 1.0 / std::sqrt(32.0);
  for (double u : {0.5, 1.0, 2.0}) {
    CHECK(std::abs(expected_nu(L.scale(), u, sc) - 1.0) <= 0.05);
    const double nu = nu_avg(L, u, sc), nu2 = nu_avg(L, 2.0 * u, sc);
    CHECK(std::abs(nu - 1.0) <= 4.0 * poisson_sd);
    // Deep traps give f close to 1 at u and 2u alike.
    CHECK(std::abs(nu2 / nu - 1.0) <= 0.05);
    // n sigma^2(u) = nu(2u) + O(nu^2 / a_n).
    CHECK(std::abs(24.0 * sigma2_avg(L, u, sc) - nu2) <= 0.01);
  }
}

TEST_CASE("check_conditions on an intermediate scale") {
  const auto p = eps_params(20, 2.0 * beta_c(0.5), 0.5, 13);
  ConditionOptions opt;
  opt.skeletons = 40;
  opt.seed = 5;
  const std::vector<double> us{0.5, 1.0, 2.0}, ds{0.05, 0.2};
  const auto r = check_conditions(p, 1.0, us, ds, opt);
  CHECK(r.target_kind == "intermediate");
  CHECK(r.alpha == doctest::Approx(0.5));
  CHECK(r.nu_chain.size() == us.size());
  CHECK(r.nu_chain[0].size() == 40);
  CHECK(r.a0_pass);
  for (std::size_t i = 0; i < us.size(); ++i) {
    CHECK(r.a0_value[i] <= 0.01);
    CHECK(r.limit_target[i] == doctest::Approx(std::pow(us[i], -0.5) * 0.5 * std::tgamma(0.5)));
  }
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(r.a3_integral[i] <= r.a3_envelope[i]);
  CHECK(r.a3_pass);

  // Same inputs, same report.
  const auto r2 = check_conditions(p, 1.0, us, ds, opt);
  CHECK(r2.nu_chain == r.nu_chain);

  CHECK_THROWS_AS(check_conditions(p, 1.0, {}, ds, opt), std::invalid_argument);
  CHECK_THROWS_AS(check_conditions(p, 1.0, us, {}, opt), std::invalid_argument);
  CHECK_THROWS_AS(check_conditions(p, 0.0, us, ds, opt), std::invalid_argument);
  CHECK_THROWS_AS(check_conditions(p, 1.0, {-1.0}, ds, opt), std::invalid_argument);
}

TEST_CASE("check_conditions on an extreme scale") {
  const auto p = eps_params(10, 2.0 * beta_c(1.0), 1.0, 17);
  ConditionOptions opt;
  opt.skeletons = 20;
  opt.marks_K = 2000;
  const auto r = check_conditions(p, 1.0, {1.0}, {0.1}, opt);
  CHECK(r.target_kind == "extreme");
  CHECK(r.alpha == doctest::Approx(0.5));
  CHECK(r.limit_target[0] > 0.0);
  const auto j = r.to_json(true);
  for (const char* key : {"scale", "nu_avg", "sigma2_avg", "theta_bound", "limit_target", "a3_integral", "pass",
                          "nu_chain", "sigma2_chain"})
    CHECK(j.contains(key));
  CHECK_FALSE(r.to_json().contains("nu_chain"));
  CHECK(j["pass"].contains("A1"));
}
