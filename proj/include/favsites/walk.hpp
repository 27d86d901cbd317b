#pragma once

// Nearest-neighbour walk on Z with O(1) per-step bookkeeping of local
// times, directed crossing counts, the favorite-site set and the f(r)
// tallies.  Local times count visits at times 1..t, so the favorite set
// is well defined from t = 1 on and the crossing identities hold exactly.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "favsites/rng.hpp"

namespace favsites::walk {

// Dense array indexed by site, growing on demand in both directions.
class SiteArray {
public:
    int64_t operator[](int64_t x) const {
        if (x >= 0) {
            auto i = static_cast<size_t>(x);
            return i < pos_.size() ? pos_[i] : 0;
        }
        auto i = static_cast<size_t>(-1 - x);
        return i < neg_.size() ? neg_[i] : 0;
    }
    int64_t& at(int64_t x) {
        if (x >= 0) {
            auto i = static_cast<size_t>(x);
            if (i >= pos_.size()) pos_.resize(i + 1, 0);
            return pos_[i];
        }
        auto i = static_cast<size_t>(-1 - x);
        if (i >= neg_.size()) neg_.resize(i + 1, 0);
        return neg_[i];
    }
    // Hull of sites ever touched (x written through at()).
    int64_t min_site() const { return neg_.empty() ? 0 : -static_cast<int64_t>(neg_.size()); }
    int64_t max_site() const { return pos_.empty() ? -1 : static_cast<int64_t>(pos_.size()) - 1; }

private:
    std::vector<int64_t> pos_; // sites 0, 1, 2, ...
    std::vector<int64_t> neg_; // sites -1, -2, ...
};

// Emitted on each up-step: t is the time of the (k+1)-st upcrossing at x,
// and h is the local time of x at that moment.
struct UpcrossEvent {
    int64_t x;
    int64_t k; // upcrossings at x strictly before this one
    uint64_t t;
    int64_t h; // L(t, x)
};

struct IdentityViolation {
    int64_t x;
    char form; // 'D' or 'U'
    int64_t lhs, rhs;
};

// One realized triple (x, h, k): at the (k+1)-st upcrossing time of x the
// favorite set is exactly {x, x+1, x+2} and the shared local time is h.
struct AHit {
    int64_t x;
    int64_t h;
    int64_t k;
    uint64_t t;
};

class WalkObservables {
public:
    uint64_t t() const { return t_; }
    int64_t pos() const { return pos_; }
    int last_step() const { return last_step_; }

    int64_t L(int64_t x) const { return L_[x]; }
    int64_t U(int64_t x) const { return U_[x]; }
    int64_t D(int64_t x) const { return D_[x]; }

    int64_t max_local_time() const { return maxL_; }
    int64_t argmax_count() const { return argmax_count_; }
    const std::vector<uint64_t>& f_counters() const { return f_; }
    bool f3_bumped() const { return f3_bumped_; }

    int64_t min_visited() const { return L_.min_site(); }
    int64_t max_visited() const { return L_.max_site(); }

    // Explicit scan; requires t >= 1.
    std::vector<int64_t> favorites() const;

    // Take one step (+1 or -1).  Returns the upcrossing event if the step
    // went up.  Local time, crossing counts, the running maximum, the
    // favorite multiplicity and the f(r) tallies are all maintained here.
    std::optional<UpcrossEvent> advance(int step);

    // Checks both crossing identities for every x in the visited hull
    // widened by one site.  Returns the first violation found.
    std::optional<IdentityViolation> check_local_time_identity() const;

private:
    uint64_t t_ = 0;
    int64_t pos_ = 0;
    int last_step_ = 0;
    SiteArray L_, U_, D_;
    int64_t maxL_ = 0;
    int64_t argmax_count_ = 0;
    std::vector<uint64_t> f_ = {0};
    bool f3_bumped_ = false; // did the last advance bump f[3]?
};

// Integer membership test for k in the open interval
// (h/2 + sqrt(h)/2, h/2 + sqrt(h)): with m = 2k - h this is
// m >= 1, m^2 > h and m^2 < 4h, all exact.
bool in_I_h(int64_t h, int64_t k);

// Recognize an A-event from a fresh upcrossing: favorite set equal to
// {x, x+1, x+2}, shared height h <= H, multiplicity index k in I_h, x >= 1.
std::optional<AHit> detect_A_event(const UpcrossEvent& ev,
                                   const WalkObservables& w, int64_t H);

struct StopRule {
    enum Kind { fixed_steps, first_A_hit, first_f3_at_level };
    Kind kind = fixed_steps;
    uint64_t t_max = 0;  // fixed_steps
    int64_t H = 64;      // A-hit accounting threshold
    int64_t h_min = 0;   // first_f3_at_level: require maxL >= h_min
    uint64_t hard_cap = 1000000000ULL;
};

struct TransienceRow {
    uint64_t t;
    int64_t favorite_min_abs; // min |x| over the favorite set
    double psi;               // sqrt(t) (log t)^-11
};

struct SimSummary {
    uint64_t t = 0;
    int64_t pos = 0;
    int64_t max_local_time = 0;
    std::vector<uint64_t> f;
    uint64_t a_hits = 0;          // realized triples with h <= H
    std::vector<AHit> hits;       // first few, for reporting
    bool capped = false;
    bool identity_ok = true;      // spot checks at checkpoints and at the end
    std::vector<TransienceRow> transience;
};

double psi(uint64_t t);

// Run one walk from the origin.  Checkpoints (ascending step counts)
// trigger a transience row and an identity spot check.
SimSummary simulate(uint64_t seed, const StopRule& rule,
                    const std::vector<uint64_t>& checkpoints = {});

} // namespace favsites::walk
