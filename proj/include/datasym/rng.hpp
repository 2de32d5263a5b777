// Seeded random draws and Halton points. All randomness in the project flows
// through this header so that a run is a pure function of its seed.
#ifndef DATASYM_RNG_HPP
#define DATASYM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "datasym/box.hpp"
#include "datasym/types.hpp"

namespace datasym {

// splitmix64 step, used to derive independent stream seeds from (seed, tags).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(seed ^ mix_seed(a ^ mix_seed(b)));
}

// mt19937_64 with explicit uniform mappings. std::uniform_real_distribution is
// implementation-defined, so the mappings are written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double unit() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  std::uint64_t integer(std::uint64_t n) {  // [0, n)
    return gen_() % n;
  }

  double gaussian() {
    // Box-Muller; one value per call keeps the stream simple to reason about.
    double u1 = unit(), u2 = unit();
    while (u1 <= 0.0) u1 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Vec in_box(const Box& box) {
    Vec x(box.dim());
    for (int k = 0; k < box.dim(); ++k) x[k] = uniform(box.lower[k], box.upper[k]);
    return x;
  }

  // Uniform direction on the unit sphere in d dimensions.
  Vec on_sphere(int d) {
    Vec v(d);
    double n2 = 0.0;
    do {
      for (int k = 0; k < d; ++k) v[k] = gaussian();
      n2 = v.squaredNorm();
    } while (n2 < 1e-300);
    return v / std::sqrt(n2);
  }

 private:
  std::mt19937_64 gen_;
};

// Radical-inverse Halton sequence over [0,1)^d, offset by the seed so that
// different seeds give different (still deterministic) point sets.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed) : dim_(dim), index_(1 + (derive_seed(seed, 0x5eed) % 4096)) {}

  Vec next() {
    Vec p(dim_);
    for (int k = 0; k < dim_; ++k) p[k] = radical_inverse(index_, prime(k));
    ++index_;
    return p;
  }

  Vec next_in(const Box& box) {
    Vec p = next();
    for (int k = 0; k < dim_; ++k) p[k] = box.lower[k] + (box.upper[k] - box.lower[k]) * p[k];
    return p;
  }

  static int prime(int k) {
    static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                      31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    if (k < 0 || k >= static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0])))
      throw ConfigError("halton: dimension above 20 unsupported");
    return kPrimes[k];
  }

 private:
  static double radical_inverse(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    return r;
  }

  int dim_;
  std::uint64_t index_;
};

}  // namespace datasym

#endif
