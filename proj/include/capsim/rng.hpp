#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "capsim/matrix.hpp"

namespace capsim {

/// Deterministic labeled random stream.
///
/// Derivation: the label bytes are hashed with 64-bit FNV-1a, XORed with the
/// master seed, and the result seeds a splitmix64 chain whose first four
/// outputs become the state of a xoshiro256++ generator. The same
/// (master, label) pair therefore always yields the same draw sequence, and
/// distinct labels give unrelated streams. Streams are single-owner; derive a
/// fresh one per unit of parallel work instead of sharing.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double next_uniform01();

  /// Standard normal via the Marsaglia polar method. Draws uniform pairs,
  /// rejects those outside the unit disc, and returns both transformed values
  /// over successive calls (the spare is cached).
  double next_gaussian();

  std::uint64_t master_seed() const { return master_; }
  const std::string& label() const { return label_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t master_ = 0;
  std::string label_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream named `label` under `master`. Label must be nonempty.
RngStream derive_stream(std::uint64_t master, std::string_view label);

/// Per-replication stream: label "#" replication appended, so replications
/// are independent of each other and of execution order.
RngStream derive_stream(std::uint64_t master, std::string_view label, int replication);

/// rows x cols matrix of i.i.d. standard normal draws; advances the stream.
Matrix gaussian(RngStream& stream, std::size_t rows, std::size_t cols);

}  // namespace capsim
