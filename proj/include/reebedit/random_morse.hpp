#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "reebedit/circle_function.hpp"
#include "reebedit/errors.hpp"

namespace reebedit {

/// Draws a trigonometric polynomial with coefficients uniform in
/// [-scale, scale] and redraws until it passes every genericity check.
/// Deterministic per seed. Throws RejectionBudgetExceeded after 1000 redraws
/// (with sensible degrees almost every draw is already simple Morse).
inline CircleFunction random_simple_morse(std::uint64_t seed, int degree, double scale,
                                          const NumericsConfig& cfg = {}) {
  if (degree < 1) throw PreconditionViolated("degree must be at least 1");
  if (!(scale > 0.0)) throw PreconditionViolated("scale must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TrigPoly p;
    p.a0 = u(rng);
    for (int k = 1; k <= degree; ++k) {
      p.cos_coeffs.push_back(u(rng));
      p.sin_coeffs.push_back(u(rng));
    }
    CircleFunction f(std::move(p));
    if (genericity_report(f, cfg).is_simple) return f;
  }
  throw RejectionBudgetExceeded("no simple Morse draw within 1000 attempts (seed " +
                                std::to_string(seed) + ", degree " + std::to_string(degree) +
                                ")");
}

}  // namespace reebedit
