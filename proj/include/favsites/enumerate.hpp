#pragma once

// Exhaustive path enumeration with exact dyadic accounting.  The walker
// supports push/pop so the whole binary tree of paths is explored with one
// incrementally maintained state.  Everything here is exact: masses are
// big-integer counts of paths (or of 2^{n-t} blocks for stopped variants)
// over the denominator 2^n.

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "favsites/rational.hpp"

namespace favsites::enumerate {

// Path walker over a fixed horizon with O(1) push and pop.
class EnumWalk {
public:
    explicit EnumWalk(int max_depth);

    int depth() const { return static_cast<int>(steps_.size()); }
    int64_t pos() const { return pos_; }
    int64_t L(int64_t x) const { return L_[idx(x)]; }
    int64_t U(int64_t x) const { return U_[idx(x)]; }
    int64_t D(int64_t x) const { return D_[idx(x)]; }
    int64_t max_local_time() const { return maxL_; }
    int64_t argmax_count() const { return argmax_; }
    const std::vector<uint64_t>& f_counters() const { return f_; }
    int last_step() const { return steps_.empty() ? 0 : steps_.back(); }

    void push(int step);
    void pop();

    std::vector<int64_t> favorites() const;

private:
    size_t idx(int64_t x) const {
        int64_t i = x + off_;
        return (i < 0 || i >= static_cast<int64_t>(L_.size()))
                   ? static_cast<size_t>(L_.size() - 1) // guard slot, always 0
                   : static_cast<size_t>(i);
    }
    int64_t off_;
    std::vector<int64_t> L_, U_, D_;
    std::vector<int> steps_;
    struct Frame {
        int64_t maxL;
        int64_t argmax;
        int32_t fidx; // f bucket bumped at this push, 0 if none
    };
    std::vector<Frame> frames_;
    int64_t pos_ = 0;
    int64_t maxL_ = 0;
    int64_t argmax_ = 0;
    std::vector<uint64_t> f_ = {0};
};

// Exact distribution of an integer path statistic, masses over 2^denom_exp.
struct ExactPMF {
    std::map<int64_t, BigInt> mass;
    int denom_exp = 0;

    BigInt total() const;
    Rational prob(int64_t key) const;
    Rational mean() const;
};

// Statistic of the full path, evaluated at depth n.
using PathStat = std::function<int64_t(const EnumWalk&)>;

// All 2^n paths.  With shard_bits > 0 the first shard_bits steps are fixed
// per shard and shards are processed by `workers` threads; the merge is a
// deterministic sequential sum, so the result is independent of workers.
ExactPMF enumerate_paths(int n, const PathStat& stat, int shard_bits = 0,
                         int workers = 1);

// Exact probability that a predicate of the full path holds at depth n.
Rational exact_event_prob(int n,
                          const std::function<bool(const EnumWalk&)>& pred);

// Exhaustive check of both crossing identities along every path.  Each push
// only alters the identity ledger at the sites adjacent to the move and at
// the old position (through the indicator), so checking those four sites at
// every node plus the full visited range at every leaf covers all (path, t).
struct IdentityReport {
    uint64_t leaves = 0;
    uint64_t violations = 0;
};
IdentityReport verify_identity_exhaustive(int n);

enum class Field { downcross, localtime };

// Law of the crossing field on a window, stopped at the (k+1)-st
// upcrossing of x, truncated at horizon n_cap.  Paths that have not
// stopped by n_cap carry their mass to `residual`.
struct ProfileLaw {
    int64_t x = 0;
    int64_t k = 0;
    std::vector<int64_t> window; // consecutive sites
    int n_cap = 0;
    Field field = Field::downcross;
    std::map<std::vector<int64_t>, BigInt> mass;
    BigInt residual = 0;
    int denom_exp = 0; // = n_cap

    Rational prob(const std::vector<int64_t>& key) const;
    Rational residual_prob() const;
};
ProfileLaw stopped_profile_law(int64_t x, int64_t k,
                               std::pair<int64_t, int64_t> window, int n_cap,
                               Field field = Field::downcross);

// Exact probability of the stopped-profile event B_x(ell): some finite time
// is an upcrossing into x at which the downcrossing field equals ell
// exactly.  Any path realizing it does so at decision time 2*sum(ell) + x,
// so the search is a pruned tree of that depth and the count is exact.
Rational profile_event_prob(int64_t x, const std::map<int64_t, int64_t>& ell);

// Disjointness audit: how many of the 2^n paths realize two or more of the
// given events.  Zero multi-hits certifies pairwise disjointness on the
// horizon.
struct PathEvent {
    int64_t x = 0;
    std::map<int64_t, int64_t> ell;
};
struct MultiHitReport {
    uint64_t leaves = 0;
    uint64_t single = 0; // paths realizing exactly one event
    uint64_t multi = 0;  // paths realizing two or more
    bool pass = false;
};
MultiHitReport count_multi_realized(const std::vector<PathEvent>& events,
                                    int n);

} // namespace favsites::enumerate
