#pragma once

#include <ism2d/base.hpp>

namespace ism {

// Out-of-band evaluation notices. Results stay well defined when a flag is
// set: overflow means a signed infinity was returned because the function
// value exceeds double range; domain_warning marks parameters outside the
// fractional orders the reduction machinery uses (alpha > 2).
struct SpecFlags {
  bool overflow = false;
  bool domain_warning = false;
};

// Gamma function on the real line. Poles (non-positive integers) throw
// math_error; values beyond double range return signed infinity and set
// overflow. Relative accuracy is a few ulps across [-170, 170].
double gamma(double x, SpecFlags* flags = nullptr);

// Two-parameter Mittag-Leffler E_{alpha,beta}(z), real z.
//
// Requires alpha >= 0.01 and beta > 0; alpha > 2 sets domain_warning. Any
// real z is accepted. Writing chi = |z|^(1/alpha) for the cancellation scale
// of the alternating series, evaluation proceeds in three regimes:
//   chi <= 8    compensated series in extended precision,
//   chi <= 100  the same series summed in 100-digit arithmetic (the max term
//               is ~e^chi, so fixed precision is hopeless here),
//   chi >  100  exponential branch terms over the principal sector plus the
//               algebraic tail -sum z^-k/Gamma(beta - alpha k), truncated at
//               its optimal point k* = chi/alpha (remainder ~e^-chi).
// Relative accuracy ~1e-13 or better throughout; for z > 0 past double range
// the result is +inf with overflow set.
double ml2(double alpha, double beta, double z, SpecFlags* flags = nullptr);

// Three-parameter (Prabhakar) Mittag-Leffler E^rho_{alpha,beta}(z).
// Parameter policy as ml2, plus rho > 0. rho = 1 reduces exactly to ml2.
// The large-argument regime is not provided for rho != 1: |z|^(1/alpha) > 100
// throws math_error.
double ml3(double alpha, double beta, double rho, double z,
           SpecFlags* flags = nullptr);

}  // namespace ism
