#pragma once

// Geometric offspring chains (with and without immigration), the spliced
// profile construction around an anchor site, coupling tests against the
// exact stopped-walk law, martingale functionals, and the Monte Carlo
// experiments built on them.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "favsites/enumerate.hpp"
#include "favsites/kernels.hpp"
#include "favsites/rng.hpp"
#include "favsites/stats.hpp"
#include "favsites/types.hpp"

namespace favsites::chains {

struct ChainStopRule {
    enum Kind { hit_ge_h, extinction, fixed_length, tilde_hit_ge_h };
    Kind kind = fixed_length;
    int64_t h = 0;
    uint64_t length = 0;
    uint64_t hard_cap = 1000000;
};

struct ChainTrajectory {
    kernels::KernelId kernel = kernels::KernelId::pi;
    std::vector<int64_t> states; // states[0] = start
    bool capped = false;
    std::optional<uint64_t> hit_time;       // first t with state >= h
    std::optional<uint64_t> tilde_hit_time; // first t >= 1 with pair sum (+1 for rho) >= h
    std::optional<uint64_t> extinction_time;
};

// Run one chain.  The extinction rule is only valid for pi (the only
// kernel absorbed at 0); asking for it elsewhere throws.
ChainTrajectory simulate_chain(kernels::KernelId kernel, int64_t start,
                               const ChainStopRule& rule, rng::Xoshiro256pp& g);

// The spliced crossing-count profile around anchor x with edge local time
// k.  `lo` is the leftmost stored site; delta[i] holds the value at site
// lo + i, and both tails extend until they die out (or the cap trips).
struct PatchedProfile {
    int64_t x = 0;
    int64_t k = 0;
    Boundary variant = Boundary::origin_immigration;
    int64_t lo = 0;
    std::vector<int64_t> delta;
    bool capped = false;

    int64_t value(int64_t y) const {
        int64_t i = y - lo;
        if (i < 0 || i >= static_cast<int64_t>(delta.size())) return 0;
        return delta[static_cast<size_t>(i)];
    }
    // The vertex field carried by the edge pair.
    int64_t lambda(int64_t y) const {
        int64_t ind = 0;
        if (x >= 1 && 0 < y && y <= x) ind = 1;
        if (x <= 0 && x < y && y <= 0) ind = -1;
        return value(y) + value(y - 1) + ind;
    }
    int64_t sum() const {
        int64_t s = 0;
        for (int64_t v : delta) s += v;
        return s;
    }
    // A walk realizing this crossing field is decided at this step count.
    int64_t decision_time() const { return 2 * sum() + x; }
};

PatchedProfile patched_profile(int64_t x, int64_t k, Boundary variant,
                               rng::Xoshiro256pp& g,
                               uint64_t tail_cap = 1000000);

// Coupling test of the sampled profile against the exact stopped-walk
// law, in both the crossing form (downcrossing field on the window) and
// the vertex form (local times vs lambda).  Samples whose decision time
// exceeds n_cap land in the truncation bucket on both sides.
struct CouplingReport {
    stats::ChiSquareReport crossing_form;
    stats::ChiSquareReport vertex_form;
    double tv_crossing = 0;
    double tv_vertex = 0;
    bool inconclusive = false;
};
CouplingReport rk_coupling_test(int64_t x, int64_t k,
                                std::pair<int64_t, int64_t> window,
                                uint64_t samples, int n_cap, Boundary variant,
                                uint64_t seed);

// M_t = sum_{s<=t} (Z_s - s) - t (Z_t - t), and 4 M'_t with
// M'_t = -Z_t^2/4 + t Z_t - t^2/2 + t/4, both exact in integers.
struct MartingaleSeq {
    std::vector<int64_t> m;
    std::vector<int64_t> four_m_prime;
};
MartingaleSeq martingale_functionals(const ChainTrajectory& traj);

struct EfracResult {
    stats::MeanCI sum_frac; // mean of sum_{t<=tau_h} (h - Z_t)/h
    double ratio_to_sqrt_h = 0;
    int64_t h = 0, k = 0;
};
// Requires h >= 4 and k in [h - 2 sqrt h, h - sqrt h].
EfracResult efrac_estimate(int64_t h, int64_t k, uint64_t reps, uint64_t seed,
                           int workers = 1);

struct OvershootResult {
    double lhs = 0;      // P(value at first passage >= u | survive to h)
    double se = 0;
    Rational rhs;        // exact kernel tail ratio at the boundary row
    uint64_t survivors = 0;
    uint64_t reps = 0;
    bool inconclusive = false;
};
// Y form: pi chain from k, conditioned (by rejection) on reaching h
// before extinction.  Z form: rho chain from k, no conditioning needed.
OvershootResult overshoot_experiment_y(int64_t h, int64_t u, int64_t k,
                                       uint64_t reps, uint64_t seed,
                                       uint64_t min_survivors = 1000);
OvershootResult overshoot_experiment_z(int64_t h, int64_t u, int64_t k,
                                       uint64_t reps, uint64_t seed);

struct EtauResult {
    stats::MeanCI tau;
    stats::MeanCI z_gain; // Z_tau - Z_0
    bool ci_overlap = false;
    bool lower_bound_ok = false; // mean tau >= (h - k) - 3 se
};
EtauResult etau_check(int64_t h, int64_t k, uint64_t reps, uint64_t seed,
                      int workers = 1);

} // namespace favsites::chains
