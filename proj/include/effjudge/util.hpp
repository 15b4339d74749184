#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace effjudge {

// 64-bit FNV-1a, optionally mixed with a seed. Stable across platforms;
// used wherever a reproducible hash of record ids is needed (presentation
// orders, tie-breaks). std::hash is not portable enough for that.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 0);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// Deterministic RNG. std::mt19937_64 output is fully specified by the
// standard; the helpers below avoid std::uniform_*_distribution and
// std::shuffle, whose mappings are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }
  double real01() { return (next() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

std::string read_file(const std::string& path);

// Writes to a temp file in the target directory, then renames into place.
void atomic_write_file(const std::string& path, std::string_view content);

std::string trim(std::string_view s);

// Gain ratios are printed with at most two decimals, trailing zeros
// trimmed down to one: 1.70 -> "1.7", 3.02 -> "3.02", 2.00 -> "2.0".
std::string format_gain(double g);

}  // namespace effjudge
