#include "capsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace capsim {

namespace {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : master_(master_seed), label_(label) {
  if (label.empty()) throw std::invalid_argument("RngStream: empty label");
  std::uint64_t seed = master_seed ^ fnv1a64(label);
  for (auto& s : state_) s = splitmix64(seed);
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++ (Blackman & Vigna)
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_uniform01() - 1.0;
    v = 2.0 * next_uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

RngStream derive_stream(std::uint64_t master, std::string_view label) {
  return RngStream(master, label);
}

RngStream derive_stream(std::uint64_t master, std::string_view label, int replication) {
  return RngStream(master, std::string(label) + "#" + std::to_string(replication));
}

Matrix gaussian(RngStream& stream, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = stream.next_gaussian();
  return out;
}

}  // namespace capsim
