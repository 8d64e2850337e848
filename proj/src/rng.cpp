#include "hdbeta/rng.hpp"

#include <cmath>
#include <limits>

namespace hdbeta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ hash_label(label));
  return splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double uniform01(Rng& rng) {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double log_gamma_variate(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    return std::log(g(rng));
  }
  // G(a) = G(a + 1) * U^(1/a)
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  double lg = std::log(g(rng));
  return lg + std::log(uniform01(rng)) / shape;
}

double beta_variate(double a, double b, Rng& rng) {
  double la = log_gamma_variate(a, rng);
  double lb = log_gamma_variate(b, rng);
  // x = 1 / (1 + exp(lb - la)) evaluated without overflow.
  double d = lb - la;
  double x = d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  constexpr double tiny = std::numeric_limits<double>::denorm_min();
  if (x <= 0.0) return tiny;
  if (x >= 1.0) return std::nextafter(1.0, 0.0);
  return x;
}

double inverse_gamma_variate(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0);
  return rate / g(rng);
}

}  // namespace hdbeta
