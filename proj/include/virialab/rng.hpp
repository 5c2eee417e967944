#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace virialab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block of
/// four 32-bit words is a pure function of (key, counter), so any particle
/// at any step can draw its noise without touching shared state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const noexcept {
    Key key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  Key key_;
};

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632BE59BD9B4E019ull));
}

/// Standard Gaussian variates for the substream (particle, step). Up to four
/// values per block; `block` selects further blocks of the same substream.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) noexcept : gen_(seed) {}

  std::array<double, 4> gaussians(std::uint64_t particle, std::uint64_t step,
                                  std::uint32_t block = 0) const noexcept {
    return gaussians(particle, step, block, 4);
  }

  /// As above, but only the first `needed` entries are filled (the rest are
  /// zero); entries that are filled equal those of the four-value call.
  std::array<double, 4> gaussians(std::uint64_t particle, std::uint64_t step, std::uint32_t block,
                                  int needed) const noexcept {
    const auto w = gen_({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                         static_cast<std::uint32_t>(particle),
                         (static_cast<std::uint32_t>(particle >> 32) << 8) ^ block});
    std::array<double, 4> out{};
    box_muller(unit_open(w[0]), unit_open(w[1]), out[0], out[1]);
    if (needed > 2) box_muller(unit_open(w[2]), unit_open(w[3]), out[2], out[3]);
    return out;
  }

  /// Uniform variates on (0, 1) for the substream (a, b).
  std::array<double, 4> uniforms(std::uint64_t a, std::uint64_t b, std::uint32_t block = 0) const noexcept {
    const auto w = gen_({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                         static_cast<std::uint32_t>(a), 0x80000000u ^ block});
    return {unit_open(w[0]), unit_open(w[1]), unit_open(w[2]), unit_open(w[3])};
  }

 private:
  static double unit_open(std::uint32_t u) noexcept { return (static_cast<double>(u) + 0.5) * 0x1p-32; }

  static void box_muller(double u1, double u2, double& z0, double& z1) noexcept {
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(t);
    z1 = r * std::sin(t);
  }

  Philox4x32 gen_;
};

}  // namespace virialab
