#pragma once

#include <array>
#include <cstdint>

namespace jumplab {

// Philox4x32-10 block function (Salmon et al., counter-based RNG).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

// A reproducible stream: key = master seed, counter high half = stream id,
// counter low half = block index. Distinct stream ids never share blocks,
// so per-path streams are independent of scheduling.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on (0, 1], 53-bit resolution.
  double uniform_open01();
  // Uniform on [0, 1).
  double uniform01() { return 1.0 - uniform_open01(); }
  // Exponential with the given rate by inverse CDF.
  double exponential(double rate);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  PhiloxKey key_{};
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buf_{};
  int used_ = 4;
};

// Derives a stream id from a tuple (e.g. scale index, path index).
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b);

}  // namespace jumplab
