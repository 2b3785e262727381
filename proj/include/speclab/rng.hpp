#pragma once

#include <cstdint>
#include <limits>

namespace speclab {

// Counter-based generator: output k of stream s is a pure function of
// (key, s, k), so sub-streams are independent of the order they are drawn in.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ ^ mix(counter_++)); }

  CounterRng split(std::uint64_t stream) const {
    CounterRng r;
    r.key_ = mix(key_ + mix(stream + 0x632be59bd9b4e019ULL));
    return r;
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace speclab
