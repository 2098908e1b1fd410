#pragma once

#include <array>
#include <cstdint>

namespace semicr {

// Philox4x32-10 block function (counter-based; no internal state).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

// Independent stream (seed, stream id). The key is the 64-bit seed; the
// counter holds (block index low, block index high, stream low, stream high),
// so draws depend only on (seed, stream, draw position).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();  // in (0, 1), 53-bit resolution
  double normal();   // standard normal, Box-Muller
  double normal(double mean, double variance);
  double exponential();  // mean 1
  std::uint64_t below(std::uint64_t bound);  // uniform on [0, bound), bound > 0

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Derived 64-bit seed for sub-task `index` of a run seeded by `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace semicr
