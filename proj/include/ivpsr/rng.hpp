#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace ivpsr {

/// Counter-based generator (Philox4x32-10). The output stream is a pure
/// function of (seed, stream, draw index), so independent streams can be
/// handed to sequences or trials without any shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1); never returns 0.
  double uniform_open();
  /// Standard normal via Box-Muller on this generator's own uniforms.
  double normal();
  /// Integer uniform on [lo, hi].
  long uniform_int(long lo, long hi);
  /// Index drawn from an (unnormalized, nonnegative) weight vector.
  int categorical(std::span<const double> weights);
  /// Standard exponential.
  double exponential();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

}  // namespace ivpsr
