#pragma once
// Deterministic cross-platform randomness: a splitmix64 generator with
// counter-based (random-access) output, substream derivation by index mixing,
// Fisher-Yates shuffling, and Gaussian sampling through Wichura's PPND16
// rational approximation of the standard normal inverse CDF.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace edisco {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 output stage (Stafford variant 13 finalizer).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Output `counter` (0-based) of the splitmix64 stream seeded with `seed`,
// without stepping through earlier outputs.
inline constexpr std::uint64_t stream_at(std::uint64_t seed,
                                         std::uint64_t counter) noexcept {
  return mix64(seed + (counter + 1) * golden_gamma);
}

// Seed for an independent substream; `index` is 0-based. Mixing (rather than
// offsetting) keeps substreams decorrelated from the master stream.
inline constexpr std::uint64_t substream_seed(std::uint64_t master,
                                              std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 1));
}

// Maps 64 random bits to the open interval (0, 1): 53-bit mantissa, centered
// so neither endpoint is reachable.
inline constexpr double bits_to_unit(std::uint64_t z) noexcept {
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

inline constexpr double uniform01_at(std::uint64_t seed,
                                     std::uint64_t counter) noexcept {
  return bits_to_unit(stream_at(seed, counter));
}

// Sequential splitmix64 stream; equivalent to stream_at(seed, 0), stream_at(
// seed, 1), ... for the same seed.
class splitmix64 {
 public:
  explicit constexpr splitmix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += golden_gamma;
    return mix64(state_);
  }

  constexpr double uniform01() noexcept { return bits_to_unit(next()); }

  // Uniform draw from {0, ..., bound - 1} by modulo reduction.
  constexpr std::uint64_t next_below(std::uint64_t bound) noexcept {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

// In-place Fisher-Yates shuffle driven by modulo draws from `gen`.
template <class T>
void shuffle(std::vector<T>& items, splitmix64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Standard normal inverse CDF (PPND16), accurate to ~1e-16 relative error for
// p in (0, 1); p = 0 and p = 1 map to -/+ infinity.
inline double normal_inverse_cdf(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("normal_inverse_cdf expects p in [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }

  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

// Standard normal draw at `counter` of the stream; deterministic function of
// (seed, counter).
inline double normal_at(std::uint64_t seed, std::uint64_t counter) {
  return normal_inverse_cdf(uniform01_at(seed, counter));
}

}  // namespace edisco
