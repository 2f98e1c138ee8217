#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "remage/rng.hpp"

namespace remage {

// Cube vertex as an n-bit word; bit i set means coordinate i equals +1.
struct Vertex {
  std::uint64_t bits = 0;
  friend bool operator==(Vertex, Vertex) = default;
};

inline int dist(Vertex a, Vertex b) { return std::popcount(a.bits ^ b.bits); }

inline Vertex flip(Vertex v, int i) { return Vertex{v.bits ^ (std::uint64_t{1} << i)}; }

// One jump of the simple random walk: flip a uniformly chosen coordinate.
inline Vertex step(Vertex v, int n, Rng& rng) {
  return flip(v, static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
}

class ParityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Push-forward of the walk under dist(., x0): the (n+1)-state birth-death
// chain with p(d -> d+1) = (n-d)/n and p(d -> d-1) = d/n.
class DistanceChain {
 public:
  explicit DistanceChain(int n);

  int n() const { return n_; }
  // Dense row-stochastic matrix, row-major (n+1) x (n+1).
  std::vector<double> matrix() const;
  // Law of the distance after l steps starting from distance 0.
  std::vector<long double> law_after(long long l) const;
  // Advance a distance law by one step, in place.
  void advance(std::vector<long double>& law) const;

 private:
  int n_;
};

// p^l(x, y) for any pair at Hamming distance d.
double transition_prob(int n, int d, long long l);

// Prop-level mixing quantities.
long long theta_n(int n);
double two_time_uniformization_defect(int n, long long i, Vertex x, Vertex y);
double tv_bound(int n, long long m);
double parity_transition(int n, Vertex x, Vertex y, long long l);
double return_sum(int n, long long m);
double far_pair_sum(int n, long long m, int d);

}  // namespace remage
