#pragma once

// Shared machinery for REM and trap clocks. Not part of the public API.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "remage/clock.hpp"
#include "remage/rng.hpp"

namespace remage::detail {

// Runs a clock from state x: value_k = sum_{i<=k} exp(log_gamma(J(i))) e_i,
// calling visit(k, state, value) for every k, until value > horizon.
template <class State, class Next, class LogGamma, class Visit>
std::uint64_t run_clock(State x, Next&& next, LogGamma&& log_gamma, double horizon, Rng& rng,
                        std::uint64_t cap, Visit&& visit) {
  double value = 0.0;
  for (std::uint64_t k = 0;; ++k) {
    if (k >= cap)
      throw HorizonError("clock: step cap " + std::to_string(cap) + " reached before horizon " +
                         std::to_string(horizon));
    value += std::exp(log_gamma(x)) * rng.exponential();
    visit(k, x, value);
    if (value > horizon) return k + 1;
    x = next(x, rng);
  }
}

struct Grid {
  std::vector<double> times;        // distinct t, ascending
  std::vector<std::size_t> time_of; // cell -> index into times
  double horizon = 0.0;             // max t(1+rho)
};

Grid make_grid(const std::vector<Cell>& cells);

// Marks avoid[c] for each cell once the streamed path passed the horizon.
void evaluate_cells(const Grid& g, const std::vector<Cell>& cells, const FirstAbove& fa,
                    std::vector<std::uint8_t>& avoid);

// successes[e][c] out of n_chain for each environment e (ok[e] false marks a
// failed environment). Builds one estimate per cell.
std::vector<CorrelationEstimate> aggregate(const std::vector<Cell>& cells,
                                           const std::vector<std::vector<std::uint32_t>>& successes,
                                           const std::vector<bool>& ok, std::size_t n_chain, Mode mode,
                                           InitKind init, std::uint64_t seed);

}  // namespace remage::detail
