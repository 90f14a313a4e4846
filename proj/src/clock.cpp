#include "mleval/clock.hpp"

#include <thread>

namespace mleval {

Clock::time_point SystemClock::now() {
  return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
}

void SystemClock::sleep_for(duration d) { std::this_thread::sleep_for(d); }

Clock::time_point SimulatedClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void SimulatedClock::sleep_for(duration d) { advance(d); }

void SimulatedClock::advance(duration d) {
  std::lock_guard lock(mutex_);
  now_ += d;
}

}  // namespace mleval
