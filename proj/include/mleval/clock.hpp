#pragma once

#include <chrono>
#include <mutex>

namespace mleval {

class Clock {
 public:
  using duration = std::chrono::milliseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
};

// Time only moves when someone sleeps or advance() is called.
class SimulatedClock final : public Clock {
 public:
  time_point now() override;
  void sleep_for(duration d) override;
  void advance(duration d);

 private:
  std::mutex mutex_;
  time_point now_{};
};

}  // namespace mleval
