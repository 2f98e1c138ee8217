#pragma once

namespace remage {

// Standard normal density.
double gaussian_density(double x);
double log_gaussian_density(double x);

// 1 - Phi(x). Full relative accuracy until the result underflows (x > ~38.4),
// beyond which use log_gaussian_tail.
double gaussian_tail(double x);
double log_gaussian_tail(double x);

// Mills ratio (1 - Phi(x)) / phi(x), valid for all finite x.
double mills_ratio(double x);

// Inverse of the tail: returns x with 1 - Phi(x) = p. The log form accepts
// probabilities far below the double range.
double inverse_gaussian_tail(double p);
double inverse_log_gaussian_tail(double log_p);

}  // namespace remage
