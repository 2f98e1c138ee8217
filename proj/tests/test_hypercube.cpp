#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/binomial.hpp>

#include "remage/hypercube.hpp"
#include "remage/stats.hpp"

using namespace remage;

namespace {

// Brute-force p^l(0, y) for every y, by repeated multiplication with the
// full 2^n x 2^n walk matrix.
std::vector<std::vector<double>> brute_force_rows(int n, int lmax) {
  const std::size_t N = std::size_t{1} << n;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t x = 0; x < N; ++x)
    for (int i = 0; i < n; ++i) P(x, x ^ (std::size_t{1} << i)) += 1.0 / n;
  std::vector<std::vector<double>> rows;
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(N);
  r(0) = 1.0;
  for (int l = 0; l <= lmax; ++l) {
    rows.emplace_back(r.data(), r.data() + N);
    r = r * P;
  }
  return rows;
}

double choose(int n, int k) { return boost::math::binomial_coefficient<double>(n, k); }

}  // namespace

TEST_CASE("step flips exactly one uniformly chosen coordinate") {
  Rng rng(1);
  const int n = 8;
  std::vector<double> counts(n, 0.0);
  Vertex v{0x5a};
  for (int i = 0; i < 200000; ++i) {
    const Vertex w = step(v, n, rng);
    REQUIRE(dist(v, w) == 1);
    counts[std::countr_zero(v.bits ^ w.bits)] += 1.0;
    v = w;
  }
  const std::vector<double> expect(n, 200000.0 / n);
  CHECK(chi_square(counts, expect).p_value > 1e-4);
}

TEST_CASE("two-step return frequency is 1/n") {
  Rng rng(2);
  const int n = 10, reps = 200000;
  int back = 0;
  for (int i = 0; i < reps; ++i) {
    const Vertex v{rng.below(1u << n)};
    back += step(step(v, n, rng), n, rng) == v;
  }
  const double p = 0.1, se = std::sqrt(p * (1 - p) / reps);
  CHECK(std::abs(back / double(reps) - p) < 5 * se);
}

TEST_CASE("distance chain matches brute-force matrix powers") {
  double worst = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const auto rows = brute_force_rows(n, 12);
    for (int l = 0; l <= 12; ++l)
      for (std::size_t y = 0; y < rows[l].size(); ++y)
        worst = std::max(worst, std::abs(transition_prob(n, std::popcount(y), l) - rows[l][y]));
  }
  CHECK(worst <= 1e-12);
  const auto r4 = brute_force_rows(4, 3);
  CHECK(transition_prob(4, 2, 3) == 0.0);  // parity
  CHECK(transition_prob(4, 1, 3) == doctest::Approx(r4[3][1]).epsilon(1e-14));
}

TEST_CASE("simple transition values and periodicity") {
  for (int n : {3, 7, 20}) {
    CHECK(transition_prob(n, 0, 1) == 0.0);
    CHECK(transition_prob(n, 0, 2) == doctest::Approx(1.0 / n));
    for (int l = 0; l < 30; ++l)
      for (int d = 0; d <= n; ++d)
        if ((d + l) % 2) CHECK(transition_prob(n, d, l) == 0.0);
  }
}

TEST_CASE("transition probabilities are normalised") {
  double worst = 0.0;
  for (int n = 1; n <= 20; ++n)
    for (int l = 0; l <= 200; l += 7) {
      double s = 0.0;
      for (int d = 0; d <= n; ++d) s += choose(n, d) * transition_prob(n, d, l);
      worst = std::max(worst, std::abs(s - 1.0));
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("distance chain spectrum is 1 - 2j/n") {
  for (int n : {3, 6, 10, 15}) {
    const auto m = DistanceChain(n).matrix();
    Eigen::MatrixXd M(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      double row = 0.0;
      for (int j = 0; j <= n; ++j) {
        M(i, j) = m[i * (n + 1) + j];
        row += M(i, j);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-15));
    }
    Eigen::VectorXd ev = M.eigenvalues().real();
    std::vector<double> got(ev.data(), ev.data() + ev.size());
    std::sort(got.begin(), got.end());
    for (int j = 0; j <= n; ++j) CHECK(std::abs(got[n - j] - (1.0 - 2.0 * j / n)) < 1e-10);
  }
}

TEST_CASE("empirical l-step law") {
  Rng rng(3);
  const int n = 8, reps = 200000;
  for (int l : {2, 4}) {
    std::vector<double> obs(n + 1, 0.0), expect(n + 1, 0.0);
    for (int r = 0; r < reps; ++r) {
      Vertex v{};
      for (int k = 0; k < l; ++k) v = step(v, n, rng);
      obs[dist(v, Vertex{})] += 1.0;
    }
    for (int d = 0; d <= n; ++d) {
      const double p = choose(n, d) * transition_prob(n, d, l);
      const double mu = reps * p, sd = std::sqrt(reps * p * (1 - p));
      CHECK(std::abs(obs[d] - mu) <= 5 * sd + 1e-9);
    }
  }
}

TEST_CASE("theta_n") {
  CHECK(theta_n(10) == 84);
  for (int n = 3; n <= 64; ++n) {
    CHECK(theta_n(n) % 2 == 0);
    CHECK(theta_n(n) <= 2LL * n * n);
  }
}

TEST_CASE("two-time uniformization defect is at most 2^-n") {
  for (int n : {8, 10, 12}) {
    for (int d = 0; d <= n; ++d) {
      const Vertex x{0}, y{(std::uint64_t{1} << d) - 1};
      // The bound holds for every i >= 0 and the defect only shrinks with i.
      double prev = INFINITY;
      for (long long i = 0; i <= 8; i += 2) {
        const double def = two_time_uniformization_defect(n, i, x, y);
        CHECK(def <= std::ldexp(1.0, -n));
        CHECK(def <= prev + 1e-17);  // rounding floor of the long double sums
        prev = def;
      }
    }
  }
}

TEST_CASE("parity chain") {
  const int n = 9;
  CHECK(parity_transition(n, Vertex{0}, Vertex{0}, 1) == doctest::Approx(1.0 / n));
  CHECK(parity_transition(n, Vertex{0}, Vertex{3}, 1) == doctest::Approx(2.0 / (n * n)));
  CHECK_THROWS_AS(parity_transition(n, Vertex{0}, Vertex{1}, 1), ParityError);
  for (int m = 1; m < 40; ++m) CHECK(tv_bound(n, m) < tv_bound(n, m - 1));
  for (int k = 8; k <= 14; ++k) CHECK(tv_bound(k, theta_n(k) / 2) <= std::ldexp(1.0, -k));
}

TEST_CASE("return and far-pair sums") {
  CHECK(return_sum(10, 0) == 0.0);
  CHECK(far_pair_sum(10, 0, 5) == 0.0);

  // Exact values include the stationary floor 2m * 2^{1-n}; the transient
  // part n^2 (return_sum - floor) stays bounded and the total decreases in n.
  double prev = INFINITY;
  for (int n = 8; n <= 14; ++n) {
    const long long m = static_cast<long long>(n) * n;
    const double rs = return_sum(n, m);
    const double floor = 2.0 * m * std::ldexp(1.0, 1 - n);
    CHECK(n * n * (rs - floor) <= 10.0);
    CHECK(n * n * rs < prev);
    prev = n * n * rs;
  }

  // Far pairs: log far_pair_sum decays linearly in n.
  std::vector<double> xs, ys;
  for (int n = 8; n <= 14; n += 2) {
    xs.push_back(n);
    ys.push_back(std::log(far_pair_sum(n, static_cast<long long>(n) * n, n / 2)));
  }
  const double xb = (xs.front() + xs.back()) / 2.0;
  double sxy = 0.0, sxx = 0.0, yb = 0.0;
  for (double y : ys) yb += y / ys.size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - xb) * (ys[i] - yb);
    sxx += (xs[i] - xb) * (xs[i] - xb);
  }
  CHECK(sxy / sxx < 0.0);
}
