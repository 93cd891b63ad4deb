#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace np2l {

/// Seeded generator with platform-independent derived distributions.
///
/// std::mt19937_64 is bit-specified by the standard, but the standard
/// distributions and std::shuffle are not, so every draw used by the library
/// goes through the helpers below:
///   - uniform(): top 53 bits of one engine output scaled by 2^-53.
///   - below(n): rejection sampling on the engine output (no modulo bias).
///   - normal(): Box-Muller, both variates of a pair are used in order.
///   - shuffle(): Fisher-Yates from the back using below().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Child generator for an independent purpose (e.g. "init", "split").
  /// The child seed depends only on (seed, purpose), never on draws made so far.
  static Rng derive(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace np2l
