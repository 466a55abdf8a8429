#pragma once

#include "fmrg/types.hpp"

#include <array>
#include <cstdint>

namespace fmrg {

// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

// Counter-based stream keyed by (seed, stream). Draw k of stream s is a pure
// function of (seed, s, k), so results do not depend on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Vector normal_vector(int d);

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derived seed for a labelled sub-experiment, so that independent studies
// sharing one master seed do not reuse streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label);

}  // namespace fmrg
