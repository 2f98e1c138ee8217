#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace remage {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased sample variance
  std::size_t count = 0;
};

MeanVar mean_var(std::span<const double> xs);

// Streaming Welford accumulator.
class Accumulator {
 public:
  void add(double x);
  void merge(const Accumulator& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Kolmogorov limiting survival function Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic;
  double p_value;
};

KsResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
  double statistic;
  double dof;
  double p_value;
};

ChiSquareResult chi_square(std::span<const double> observed, std::span<const double> expected);

struct Interval {
  double lo, hi;
};

// 95% Wilson score interval (z = 1.959964) for k successes in n trials.
Interval wilson_interval(double k, double n, double z = 1.959963984540054);

}  // namespace remage
