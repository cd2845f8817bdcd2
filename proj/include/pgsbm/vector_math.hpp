#pragma once

// Elementwise loops written for SIMD math. Compiled with relaxed floating
// point; inputs must be finite.

namespace pgsbm::vmath {

/// out[j] = log(1 + exp(shift + x[j])).
void softplus_shifted(const double* x, double shift, int count, double* out);

/// Mixture weight of the exponential proposal of the PG(1, c) sampler for
/// z[j] = |c_j| / 2; only valid for z < 30 (callers recompute above).
void pg_exponential_mass(const double* z, int count, double* out);

}  // namespace pgsbm::vmath
