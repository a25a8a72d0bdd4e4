#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace kaclab {

// Philox4x32-10 counter-based generator. The key is the master seed and the
// upper half of the counter is the stream id, so (seed, run index) gives an
// independent stream without any shared state.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  // 53-bit uniform on [0,1)
  double uniform();
  // uniform on (0,1]
  double uniform_pos() { return 1.0 - uniform(); }
  double normal();
  double exponential(double rate);
  // unbiased integer in [0, n)
  std::uint64_t index(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kaclab
