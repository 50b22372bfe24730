#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace bmdp {

// Counter-based splittable generator. A stream is identified by a 64-bit key;
// the i-th output is the SplitMix64 finalizer applied to key + i*golden, so
// draws are a pure function of (key, counter). Substreams are derived from the
// stream key and a tag only, never from the draw cursor, so the substream tree
// is independent of how many values the parent has produced.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : key_(mix(seed ^ kKeyTweak)), ctr_(0) {}

  // Named substream (round/layer/dataset tags). Distinct tags give independent streams.
  Prng child(std::string_view tag) const { return Prng(key_, hash_tag(tag)); }
  Prng child(std::uint64_t index) const { return Prng(key_, mix(index ^ kIndexTweak)); }
  Prng child(std::string_view tag, std::uint64_t index) const {
    return Prng(key_, hash_tag(tag) ^ mix(index ^ kIndexTweak));
  }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * kGolden); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}; unbiased via rejection.
  int uniform_int(int n);

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn from an unnormalized nonnegative weight vector.
  int categorical(std::span<const double> weights);

 private:
  Prng(std::uint64_t parent_key, std::uint64_t salt) : key_(mix(parent_key ^ rotl(salt, 23))), ctr_(0) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kKeyTweak = 0x8BADF00DDEADBEEFull;
  static constexpr std::uint64_t kIndexTweak = 0x5BF0361C9E37EB77ull;

  static std::uint64_t rotl(std::uint64_t v, int r) { return (v << r) | (v >> (64 - r)); }

  // SplitMix64 finalizer (Stafford mix13).
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ull;
    }
    return mix(h);
  }

  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace bmdp
