#pragma once

#include <cstddef>
#include <functional>

namespace remage {

// Thread count: explicit override if set, then REMAGE_THREADS, then hardware.
unsigned thread_count();
void set_thread_count(unsigned n);  // 0 restores the default lookup

// Runs body(i) for i in [0, count) on a pool with a shared atomic cursor.
// Callers write results into slot i, so merges are order-independent.
// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace remage
