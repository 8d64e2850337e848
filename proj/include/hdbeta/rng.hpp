#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hdbeta {

using Rng = std::mt19937_64;

/// Stable 64-bit hash of a label (FNV-1a).
std::uint64_t hash_label(std::string_view label) noexcept;

/// Derives an independent stream seed from a top-level seed, a purpose label
/// and an index (chain number, observation number, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index = 0) noexcept;

inline Rng make_rng(std::uint64_t seed, std::string_view label,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, label, index));
}

double standard_normal(Rng& rng);
double uniform01(Rng& rng);  // open interval (0,1)

/// Gamma(shape, 1) variate returned on the log scale, so that very small
/// shapes do not underflow to zero.
double log_gamma_variate(double shape, Rng& rng);

/// Beta(a, b) variate strictly inside (0,1) whenever the result is
/// representable; computed from two log-gamma variates.
double beta_variate(double a, double b, Rng& rng);

/// Inverse-gamma variate with density proportional to x^(-shape-1) exp(-rate/x).
double inverse_gamma_variate(double shape, double rate, Rng& rng);

}  // namespace hdbeta
