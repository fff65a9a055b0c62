#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace penlab {

// Counter-based stream generator (Philox 4x64-10, constants from the
// Random123 suite). A stream is identified by (seed, stream, substream);
// every draw depends only on that identity and the draw index, so streams
// created independently on different threads produce identical sequences
// regardless of scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : key_{seed, stream}, substream_(substream) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buf_ = block(key_, {block_, 0, substream_, 0});
      ++block_;
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  // uniform on [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1]
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // standard normal, Box-Muller with the second value cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // mean 0, variance 1, support bounded by cutoff/sd(cutoff)
  double truncated_normal(double cutoff) {
    double z;
    do {
      z = normal();
    } while (std::abs(z) > cutoff);
    return z / truncated_sd(cutoff);
  }

  // sd of a standard normal conditioned on |Z| <= c
  static double truncated_sd(double c) {
    const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * 3.14159265358979323846);
    const double mass = std::erf(c / std::sqrt(2.0));
    return std::sqrt(1.0 - 2.0 * c * pdf / mass);
  }

  // unbiased uniform integer in [0, bound)
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 2> key,
                                            std::array<std::uint64_t, 4> ctr) {
    constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
    constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
    constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
    constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;
    for (int round = 0;; ++round) {
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint64_t>(p1 >> 64) ^ ctr[1] ^ key[0],
             static_cast<std::uint64_t>(p1),
             static_cast<std::uint64_t>(p0 >> 64) ^ ctr[3] ^ key[1],
             static_cast<std::uint64_t>(p0)};
      if (round == 9) return ctr;
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
  }

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t substream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Fisher-Yates
template <typename T>
void shuffle(std::vector<T>& v, RngStream& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[g.below(i)]);
  }
}

}  // namespace penlab
