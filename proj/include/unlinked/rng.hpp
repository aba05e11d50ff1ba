#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

// Deterministic, splittable random streams. Everything here is hand-rolled on
// purpose: byte-identical output across platforms and thread counts is part of
// the contract, and standard-library distributions do not pin their algorithms.
//
// A Stream is identified by a 64-bit key derived from (seed, path of tags).
// Derivation is a hash, not a jump, so child(i) never overlaps the parent
// sequence and the same (seed, path) always names the same stream.

namespace unlinked::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// Fold one path component into a key. Two splitmix rounds are enough to
// decorrelate adjacent tags; keys are opaque, only equality of derivation
// paths matters.
inline std::uint64_t fold_key(std::uint64_t key, std::uint64_t word) {
  std::uint64_t s = key ^ (0xd1b54a32d192ed03ULL * (word + 0x632be59bd9b4e019ULL));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ rotl(b, 27);
}
}  // namespace detail

/// Counter-seeded xoshiro256++ stream with key-path derivation.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : key_(detail::fold_key(0x5bf03635aed83acdULL, seed)) {
    reset_state();
  }

  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : Stream(seed) {
    for (std::uint64_t tag : path) key_ = detail::fold_key(key_, tag);
    reset_state();
  }

  /// Derive an independent child stream. Does not advance this stream.
  Stream child(std::uint64_t tag) const {
    Stream s(*this);
    s.key_ = detail::fold_key(key_, tag);
    s.reset_state();
    return s;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform draw in (0, 1]; strictly positive so log(u) is always finite.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller. No cached spare: exactly two uniforms per
  /// draw keeps stream consumption independent of call history.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  /// Gamma(shape, scale) via Marsaglia-Tsang, with the usual power boost for
  /// shape < 1. Draw count varies per call (rejection), which is fine because
  /// streams are split per purpose, never shared across purposes.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
      throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, 1.0);
      const double u = uniform();
      return scale * g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
  }

  /// Uniform index in [0, n). Rejection sampling, no modulo bias.
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("index: n must be positive");
    const std::uint64_t m = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0 - m) % m;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return static_cast<std::size_t>(r % m);
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  void reset_state() {
    std::uint64_t t = key_;
    for (auto& w : s_) w = splitmix64(t);
    if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
  }

  std::uint64_t key_;
  std::array<std::uint64_t, 4> s_{};
};

/// In-place Fisher-Yates shuffle driven by a stream.
template <class T>
void shuffle(std::vector<T>& v, Stream& s) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[s.index(i)]);
  }
}

}  // namespace unlinked::rng
