#pragma once

// Exact absorption analysis for the geometric offspring chains on the
// finite state window {0, ..., h-1}: hitting probabilities, expected
// absorption times and occupation measures, constrained (pair-sum)
// survival, and from these the exact event probabilities and the exact
// expected count E N_H.  Everything here is rational arithmetic; the
// double linear_solve exists for generic plumbing and is residual-checked.

#include <cstdint>
#include <vector>

#include "favsites/kernels.hpp"
#include "favsites/rational.hpp"
#include "favsites/types.hpp"

namespace favsites::solver {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;
using RVec = std::vector<Rational>;
using RMat = std::vector<RVec>;

// Gaussian elimination with partial pivoting.  The double overload checks
// the residual ||Ax - b||_inf <= 1e-9 * max(1, ||b||_inf) and throws if the
// matrix is singular or the solution is unreliable.  Max dimension 512.
Vec linear_solve(Mat A, Vec b);
RVec linear_solve(RMat A, RVec b);

struct AbsorptionSpec {
    kernels::KernelId kernel = kernels::KernelId::pi;
    int64_t h = 0;              // reaching >= h absorbs (failure/exit)
    bool lower_absorbing = false; // state 0 absorbs (only meaningful for pi)
    bool pair_constraint = false; // restrict moves to pair sums below h
};

// P(absorb at 0 before reaching >= h) for the pi chain from `start`.
// start = 0 counts as already absorbed.
Rational hitting_probability(const AbsorptionSpec& spec, int64_t start);
// Same, for every start 0..h-1 in one solve.
RVec hitting_probability_all(const AbsorptionSpec& spec);

struct Absorption {
    Rational e_tau;      // expected steps to absorption
    Rational e_z_tau;    // expected chain value at absorption (upper exits)
    RVec occupation;     // expected visits per transient state (index = state)
};
// Expected absorption data.  kernel rho: no lower absorption, the only
// exit is >= h.  kernel pi with lower_absorbing: exit is min(hit 0, >= h).
Absorption expected_absorption(const AbsorptionSpec& spec, int64_t start);

// P(pair-constrained pi chain survives to extinction): all consecutive
// sums stay below h and the chain reaches 0.  start must be < h.
Rational constrained_survival(const AbsorptionSpec& spec, int64_t start);
// Vector form, index = start state 0..h-1 (entry 0 is 1).
RVec constrained_survival_all(int64_t h);

// Exact probability of the three-favorite-site event at anchor x with
// height h and edge local time k (zero when k is outside the admissible
// window).  The boundary variant selects the law of the step across the
// origin seam; the default is the empirically adjudicated one.
Rational exact_A_probability(int64_t x, int64_t h, int64_t k,
                             Boundary variant = Boundary::origin_immigration);

// Exact E N_H: sum over h <= H, admissible k, and all anchors x >= 1 via
// the fundamental matrix of the constrained inner chain.  Optionally
// reports the per-h contributions.
struct NHTerm {
    int64_t h;
    Rational contribution;
};
Rational exact_NH(int64_t H, Boundary variant = Boundary::origin_immigration,
                  std::vector<NHTerm>* per_h = nullptr);

} // namespace favsites::solver
