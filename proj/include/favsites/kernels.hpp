#pragma once

#include <cstdint>
#include <string>

#include "favsites/rational.hpp"
#include "favsites/rng.hpp"

// =============================================================================
// One-step transition laws for the crossing-count chains.
//
//   pi(i, j)      = 2^-(i+j) * C(i+j-1, j)   for i >= 1, and pi(0, .) = delta_0.
//                   Law of a sum of i independent Geometric(1/2) counts.
//   rho(i, j)     = pi(i+1, j)               one immigrant joins before reproduction
//   rhostar(i, j) = pi(i, j-1)               one immigrant joins after reproduction
//
// Exact values are GMP rationals. The floating path is exact (via rationals)
// up to i+j = 64 and switches to a log-space evaluation beyond, accurate to
// ~1e-13 relative (integer log-gamma values are cached in double-double
// precision from MPFR, so no accuracy cliff at large arguments).
// =============================================================================

namespace favsites::kernels {

enum class KernelId { pi, rho, rhostar };

const char* name(KernelId k);
KernelId parse_kernel(const std::string& s); // throws std::invalid_argument

// Exact transition probability; j < 0 yields 0, i must be >= 0.
Rational prob_exact(KernelId k, int64_t i, int64_t j);

double prob(KernelId k, int64_t i, int64_t j);

// One transition sampled from state i, built from fair bits only.
uint64_t sample(KernelId k, uint64_t i, rng::Xoshiro256pp& g);

struct Moments {
    double mean;
    double second; // E[state^2] after one step
};

Moments moments_closed(KernelId k, uint64_t i);

// Truncated summation with a certified geometric tail bound <= tol on the
// dropped mass (power = 0) or dropped j^power-weighted mass.
uint64_t certified_cutoff(KernelId k, uint64_t i, double tol, int power);
Moments moments_summed(KernelId k, uint64_t i, double tol = 1e-12);
double row_sum(KernelId k, uint64_t i, double tol = 1e-12);

// Exact partial sums over j = 0..J, used by the shift-identity tests.
Rational cdf_exact(KernelId k, uint64_t i, uint64_t J);
Rational mean_partial_exact(KernelId k, uint64_t i, uint64_t J);
Rational second_partial_exact(KernelId k, uint64_t i, uint64_t J);

// Scaled flatness of pi over the central window
// i, j in (0.5*(h - 10*sqrt(h)), 0.5*(h + 10*sqrt(h))), plus exact
// monotonicity spot checks pi(i1, j) > pi(i2, j) for j < i1 < i2.
struct WindowCheck {
    uint64_t h = 0;
    double min_scaled = 0;      // min over the window of pi(i,j) * sqrt(h)
    double max_scaled = 0;
    double boundary_max_scaled = 0; // max over i + j == h within the window
    bool monotone_ok = false;
    uint64_t pairs_checked = 0;
};

WindowCheck asymptotic_window_check(uint64_t h, uint64_t mono_samples = 32);

} // namespace favsites::kernels
