#include "remage/hypercube.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace remage {

namespace {

void check_n(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("hypercube: n must be in [1, 64], got " + std::to_string(n));
}

long double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  k = std::min(k, n - k);
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

// The recursion only adds nonnegative terms, so clamping guards rounding only.
double clamp_prob(long double p) { return static_cast<double>(std::clamp(p, 0.0L, 1.0L)); }

}  // namespace

DistanceChain::DistanceChain(int n) : n_(n) { check_n(n); }

std::vector<double> DistanceChain::matrix() const {
  const int m = n_ + 1;
  std::vector<double> P(static_cast<std::size_t>(m) * m, 0.0);
  for (int d = 0; d <= n_; ++d) {
    if (d < n_) P[d * m + d + 1] = static_cast<double>(n_ - d) / n_;
    if (d > 0) P[d * m + d - 1] = static_cast<double>(d) / n_;
  }
  return P;
}

void DistanceChain::advance(std::vector<long double>& law) const {
  std::vector<long double> next(law.size(), 0.0L);
  const long double n = n_;
  for (int d = 0; d <= n_; ++d) {
    const long double w = law[d];
    if (w == 0.0L) continue;
    if (d < n_) next[d + 1] += w * (n - d) / n;
    if (d > 0) next[d - 1] += w * d / n;
  }
  law.swap(next);
}

std::vector<long double> DistanceChain::law_after(long long l) const {
  if (l < 0) throw std::invalid_argument("law_after: negative step count");
  std::vector<long double> law(n_ + 1, 0.0L);
  law[0] = 1.0L;
  for (long long k = 0; k < l; ++k) advance(law);
  return law;
}

double transition_prob(int n, int d, long long l) {
  check_n(n);
  if (d < 0 || d > n) throw std::invalid_argument("transition_prob: distance out of range");
  if (l < 0) throw std::invalid_argument("transition_prob: negative step count");
  if ((d % 2) != (l % 2)) return 0.0;
  const auto law = DistanceChain(n).law_after(l);
  return clamp_prob(law[d] / binom(n, d));
}

long long theta_n(int n) {
  if (n < 3) throw std::invalid_argument("theta_n: needs n >= 3");
  const double v = 1.5 * (n - 1) * std::log(2.0) / std::abs(std::log1p(-2.0 / n));
  return 2 * static_cast<long long>(std::ceil(v));
}

double two_time_uniformization_defect(int n, long long i, Vertex x, Vertex y) {
  check_n(n);
  if (i < 0) throw std::invalid_argument("defect: negative i");
  const int d = dist(x, y);
  const long long l0 = i + theta_n(n);
  DistanceChain chain(n);
  auto law = chain.law_after(l0);
  const long double c = binom(n, d);
  const long double p0 = law[d] / c;
  chain.advance(law);
  const long double p1 = law[d] / c;
  // Delta / (2 pi(x) pi(y)) with pi uniform: 2^{n-1} (p0 + p1).
  const long double ratio = std::ldexp(1.0L, n - 1) * (p0 + p1);
  return static_cast<double>(std::abs(ratio - 1.0L));
}

double tv_bound(int n, long long m) {
  check_n(n);
  if (n < 3) throw std::invalid_argument("tv_bound: needs n >= 3");
  if (m < 0) throw std::invalid_argument("tv_bound: negative m");
  // Parity chain: nu(x) = 2^{1-n}, beta_* = (1 - 2/n)^2.
  const long double nu = std::ldexp(1.0L, 1 - n);
  const long double bstar = std::pow(1.0L - 2.0L / n, 2.0L);
  return static_cast<double>((1.0L - nu) / nu * std::pow(bstar, 2.0L * m));
}

double parity_transition(int n, Vertex x, Vertex y, long long l) {
  check_n(n);
  const int d = dist(x, y);
  if (d % 2 != 0) throw ParityError("parity_transition: x and y lie in different parity classes");
  return transition_prob(n, d, 2 * l);
}

namespace {

long double window_sum(int n, long long m, int d) {
  // Sum over l = 1..2m of p^{l+2}(y, z) at distance d.
  DistanceChain chain(n);
  auto law = chain.law_after(3);
  const long double c = binom(n, d);
  long double sum = 0.0L;
  for (long long l = 1; l <= 2 * m; ++l) {
    sum += law[d] / c;
    chain.advance(law);
  }
  return sum;
}

}  // namespace

double return_sum(int n, long long m) {
  check_n(n);
  if (m < 0) throw std::invalid_argument("return_sum: negative m");
  return static_cast<double>(window_sum(n, m, 0));
}

double far_pair_sum(int n, long long m, int d) {
  check_n(n);
  if (m < 0) throw std::invalid_argument("far_pair_sum: negative m");
  if (d < 0 || d > n) throw std::invalid_argument("far_pair_sum: distance out of range");
  return static_cast<double>(window_sum(n, m, d));
}

}  // namespace remage
