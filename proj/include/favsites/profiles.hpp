#pragma once

// Crossing-profile events: the four-value pattern families, the exact
// product formula for P(B_x(ell)), the push-down perturbation map with its
// additivity and ratio checks, disjointness audits, and the walk-based
// estimators for counts of three-favorite-site events.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "favsites/rational.hpp"
#include "favsites/stats.hpp"
#include "favsites/types.hpp"

namespace favsites::profiles {

struct CrossingProfile {
    int64_t x = 1;                       // anchor site
    std::map<int64_t, int64_t> support;  // site -> positive count, zeros omitted

    int64_t value(int64_t y) const {
        auto it = support.find(y);
        return it == support.end() ? 0 : it->second;
    }
    void set(int64_t y, int64_t v) {
        if (v == 0)
            support.erase(y);
        else
            support[y] = v;
    }
    int64_t k() const { return value(x - 1); }
    int64_t sum() const {
        int64_t s = 0;
        for (const auto& [y, v] : support) s += v;
        return s;
    }
    int64_t decision_time() const { return 2 * sum() + x; }
    bool operator<(const CrossingProfile& o) const {
        if (x != o.x) return x < o.x;
        return support < o.support;
    }
    bool operator==(const CrossingProfile& o) const {
        return x == o.x && support == o.support;
    }
};

struct EventFamily {
    int64_t x = 1, h = 0, k = 0;
};

// Membership in the pattern family: the four pattern values at x-1..x+2
// and every other adjacent pair summing below h.
bool is_admissible(const CrossingProfile& ell, const EventFamily& fam);
// The family's canonical member: pattern values, zeros elsewhere.
CrossingProfile minimal_member(const EventFamily& fam);

// Exact P(B_x(ell)) as the product of kernel steps along the profile.
// Zero for unrealizable profiles; the diagnostic variant also names the
// first vanishing factor.
Rational profile_probability(const CrossingProfile& ell,
                             Boundary variant = Boundary::origin_immigration);
struct ProbabilityBreakdown {
    Rational p;
    std::string first_zero_factor; // empty when p > 0
};
ProbabilityBreakdown profile_probability_diag(
    const CrossingProfile& ell, Boundary variant = Boundary::origin_immigration);

// All profiles obtained by lowering ell at x+1 and x+2 (everything else
// equal), filtered to realizable ones, in ascending (value(x+1), value(x+2))
// order.  Throws when the candidate rectangle exceeds the cap.
std::vector<CrossingProfile> perturbations(const CrossingProfile& ell,
                                           size_t cap = 10000);

// Sum of P(B_x(ell*)) over the perturbation family (disjoint events).
Rational perturbation_mass(const CrossingProfile& ell,
                           Boundary variant = Boundary::origin_immigration);

// P(B_x(phi_x(ell))) / (h * P(B_x(ell))), exact.
Rational fluc_ratio(const CrossingProfile& ell, const EventFamily& fam,
                    Boundary variant = Boundary::origin_immigration);

// Exhaustive path audit that no two of the given events co-occur on any
// path of length n.  Events are deduplicated first.
struct DisjointnessReport {
    uint64_t events = 0;
    uint64_t leaves = 0;
    uint64_t single = 0;
    uint64_t multi = 0;
    bool pass = false;
};
DisjointnessReport disjointness_check(const std::vector<CrossingProfile>& events,
                                      int n);

// Walk-based estimate of the number of three-favorite-site events with
// height <= H seen within T_max steps, per replica.
struct NhEstimate {
    stats::MeanCI n_per_run;
    uint64_t total_hits = 0;
    uint64_t f3_total = 0; // f(3) tally summed over replicas
    uint64_t reps = 0;
};
NhEstimate nh_direct_estimate(int64_t H, uint64_t t_max, uint64_t reps,
                              uint64_t seed, int workers = 1);

// Per-cell frequency of the event at (x, h, k) over independent walks.
// Each replica stops once no further hit is possible: the running maximum
// local time passed max(h), every tracked upcrossing budget is spent, or
// the safety cap is reached.
struct CellEstimate {
    int64_t x = 0, h = 0, k = 0;
    uint64_t hits = 0;
    uint64_t reps = 0;
    double phat = 0;
};
std::vector<CellEstimate>
a_event_frequencies(const std::vector<std::array<int64_t, 3>>& cells,
                    uint64_t t_cap, uint64_t reps, uint64_t seed,
                    int workers = 1);

// Monte Carlo ratio E[N^2] / (E[N] log H) with the pair-term split at
// |x - x'| <= 3 (near) versus > 3 (far).
struct SecondMomentReport {
    double mean_n = 0;
    double mean_n2 = 0;
    double ratio = 0;
    double near_pairs_mean = 0; // unordered pairs per replica
    double far_pairs_mean = 0;
    double near_share = 0;      // of the pair part of E N^2
    double far_share = 0;
    uint64_t total_hits = 0;
    uint64_t reps = 0;
    bool inconclusive = false;
};
SecondMomentReport second_moment_diagnostic(int64_t H, uint64_t t_max,
                                            uint64_t reps, uint64_t seed,
                                            int workers = 1);

} // namespace favsites::profiles
