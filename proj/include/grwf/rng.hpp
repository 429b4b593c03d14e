#pragma once

// Philox4x64-10 counter-based generator. Raw output matches numpy's
// Philox bit generator for the same key and counter (the counter is
// advanced before each block is produced).
//
// Streams: key = {master_seed, (trajectory << 16) | purpose}, counter = 0.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace grwf {

enum class Purpose : std::uint64_t {
  Waiting = 1,
  Position = 2,
  Label = 3,
  Thinning = 4,
  Restart = 5,
  InitialState = 6,
  Test = 7,
};

class Philox4x64 {
 public:
  using result_type = std::uint64_t;
  using Key = std::array<std::uint64_t, 2>;
  using Counter = std::array<std::uint64_t, 4>;

  Philox4x64() : Philox4x64(Key{0, 0}) {}
  explicit Philox4x64(Key key, Counter counter = {0, 0, 0, 0}) : key_(key), ctr_(counter) {}

  static Philox4x64 stream(std::uint64_t master_seed, std::uint64_t trajectory, Purpose purpose,
                           std::uint64_t restart = 0) {
    // restart count goes into the top counter word so restarted draws never overlap
    Philox4x64 g(Key{master_seed, (trajectory << 16) | static_cast<std::uint64_t>(purpose)});
    g.ctr_[3] = restart;
    return g;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      increment();
      block_ = bijection(ctr_, key_);
      pos_ = 0;
    }
    return block_[pos_++];
  }

  // [0, 1) with 53 random bits, same mapping as numpy's random()
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double mean) { return -mean * std::log(uniform_pos()); }

  double normal() {
    // Box-Muller, one value per call
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = max() - max() % n;
    std::uint64_t v;
    do {
      v = (*this)();
    } while (v >= lim);
    return v % n;
  }

  static Counter bijection(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B97F4A7C15ULL;
        key[1] += 0xBB67AE8584CAA73BULL;
      }
      const unsigned __int128 p0 = static_cast<unsigned __int128>(0xD2E7470EE14C6C93ULL) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(0xCA5A826395121157ULL) * ctr[2];
      const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
      const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  void increment() {
    for (auto& w : ctr_)
      if (++w != 0) break;
  }

  Key key_;
  Counter ctr_;
  Counter block_{};
  int pos_ = 4;
};

using Rng = Philox4x64;

}  // namespace grwf
