#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers: every draw is a pure function of
// (seed, chain, step, slot), so results do not depend on execution order
// or thread count. Gaussians come from the inverse normal CDF applied to a
// 52-bit uniform, which keeps golden files stable across platforms.
namespace tild::rng {

// splitmix64 finalizer (Steele/Lea/Flood constants).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Step tag reserved for initialization draws (never a real step index).
inline constexpr std::uint64_t kInitStep = ~0ull;

constexpr std::uint64_t word(std::uint64_t seed, std::uint64_t chain,
                             std::uint64_t step, std::uint64_t slot) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(chain + 0x632be59bd9b4e019ull));
  h = mix64(h ^ mix64(step + 0x9e3779b97f4a7c15ull));
  h = mix64(h ^ mix64(slot + 0xd1b54a32d192ed03ull));
  return h;
}

// Uniform in the open interval (0,1); never 0 or 1. 52 bits: with 53 the
// top word would round to 1.0 exactly (2^53 - 1 + 0.5 is not representable).
constexpr double to_unit(std::uint64_t w) noexcept {
  return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
}

constexpr double uniform(std::uint64_t seed, std::uint64_t chain,
                         std::uint64_t step, std::uint64_t slot) noexcept {
  return to_unit(word(seed, chain, step, slot));
}

// Wichura's AS 241 (PPND16): inverse of the standard normal CDF,
// accurate to ~1e-16 relative for p in (0,1).
inline double inverse_normal_cdf(double p) noexcept {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -v : v;
}

inline double normal(std::uint64_t seed, std::uint64_t chain,
                     std::uint64_t step, std::uint64_t slot) noexcept {
  return inverse_normal_cdf(uniform(seed, chain, step, slot));
}

}  // namespace tild::rng
