#include "favsites/enumerate.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <stdexcept>
#include <thread>

namespace favsites::enumerate {

EnumWalk::EnumWalk(int max_depth) {
    if (max_depth < 0 || max_depth > 40)
        throw std::invalid_argument("max_depth out of range");
    off_ = max_depth + 3;
    size_t sz = 2 * static_cast<size_t>(max_depth) + 8;
    L_.assign(sz, 0);
    U_.assign(sz, 0);
    D_.assign(sz, 0);
    steps_.reserve(static_cast<size_t>(max_depth));
    frames_.reserve(static_cast<size_t>(max_depth));
}

void EnumWalk::push(int step) {
    pos_ += step;
    size_t i = static_cast<size_t>(pos_ + off_);
    assert(i + 1 < L_.size());
    if (step == 1)
        ++U_[i];
    else
        ++D_[i];
    int64_t l = ++L_[i];
    Frame fr{maxL_, argmax_, 0};
    if (l > maxL_) {
        maxL_ = l;
        argmax_ = 1;
    } else if (l == maxL_) {
        ++argmax_;
    }
    if (l == maxL_) {
        auto r = static_cast<size_t>(argmax_);
        if (r >= f_.size()) f_.resize(r + 1, 0);
        ++f_[r];
        fr.fidx = static_cast<int32_t>(r);
    }
    steps_.push_back(step);
    frames_.push_back(fr);
}

void EnumWalk::pop() {
    int step = steps_.back();
    steps_.pop_back();
    Frame fr = frames_.back();
    frames_.pop_back();
    if (fr.fidx) --f_[static_cast<size_t>(fr.fidx)];
    size_t i = static_cast<size_t>(pos_ + off_);
    --L_[i];
    if (step == 1)
        --U_[i];
    else
        --D_[i];
    pos_ -= step;
    maxL_ = fr.maxL;
    argmax_ = fr.argmax;
}

std::vector<int64_t> EnumWalk::favorites() const {
    std::vector<int64_t> out;
    int d = depth();
    for (int64_t x = -d; x <= d; ++x)
        if (L(x) == maxL_ && maxL_ > 0) out.push_back(x);
    return out;
}

BigInt ExactPMF::total() const {
    BigInt s = 0;
    for (const auto& [k, m] : mass) s += m;
    return s;
}

Rational ExactPMF::prob(int64_t key) const {
    auto it = mass.find(key);
    if (it == mass.end()) return Rational(0);
    return dyadic(it->second, denom_exp);
}

Rational ExactPMF::mean() const {
    BigInt s = 0;
    for (const auto& [k, m] : mass) s += BigInt(k) * m;
    return dyadic(s, denom_exp);
}

namespace {

template <class Leaf>
void dfs_leaves(EnumWalk& w, int remaining, Leaf&& leaf) {
    if (remaining == 0) {
        leaf(w);
        return;
    }
    w.push(1);
    dfs_leaves(w, remaining - 1, leaf);
    w.pop();
    w.push(-1);
    dfs_leaves(w, remaining - 1, leaf);
    w.pop();
}

} // namespace

ExactPMF enumerate_paths(int n, const PathStat& stat, int shard_bits,
                         int workers) {
    if (n < 0 || n > 26) throw std::invalid_argument("n out of range");
    if (shard_bits < 0 || shard_bits > n) shard_bits = 0;
    size_t shards = size_t{1} << shard_bits;
    std::vector<std::map<int64_t, uint64_t>> partial(shards);

    auto run_shard = [&](size_t s) {
        EnumWalk w(n);
        for (int b = 0; b < shard_bits; ++b)
            w.push((s >> b) & 1 ? 1 : -1);
        auto& local = partial[s];
        dfs_leaves(w, n - shard_bits,
                   [&](const EnumWalk& v) { ++local[stat(v)]; });
    };

    int nw = std::max(1, std::min<int>(workers, static_cast<int>(shards)));
    if (nw == 1) {
        for (size_t s = 0; s < shards; ++s) run_shard(s);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(nw));
        for (int i = 0; i < nw; ++i)
            pool.emplace_back([&]() {
                for (size_t s = next.fetch_add(1); s < shards;
                     s = next.fetch_add(1))
                    run_shard(s);
            });
        for (auto& th : pool) th.join();
    }

    // Deterministic merge in shard order, independent of thread schedule.
    ExactPMF out;
    out.denom_exp = n;
    for (size_t s = 0; s < shards; ++s)
        for (const auto& [k, c] : partial[s]) out.mass[k] += BigInt(c);
    return out;
}

Rational exact_event_prob(int n,
                          const std::function<bool(const EnumWalk&)>& pred) {
    if (n < 0 || n > 26) throw std::invalid_argument("n out of range");
    EnumWalk w(n);
    uint64_t count = 0;
    dfs_leaves(w, n, [&](const EnumWalk& v) {
        if (pred(v)) ++count;
    });
    return dyadic(BigInt(count), n);
}

namespace {

bool identity_holds_at(const EnumWalk& w, int64_t x) {
    int64_t l = w.L(x);
    int64_t p = w.pos();
    int64_t viaD = w.D(x) + w.D(x - 1) + ((0 < x && x <= p) ? 1 : 0) -
                   ((p < x && x <= 0) ? 1 : 0);
    if (l != viaD) return false;
    int64_t viaU = w.U(x) + w.U(x + 1) + ((p <= x && x < 0) ? 1 : 0) -
                   ((0 <= x && x < p) ? 1 : 0);
    return l == viaU;
}

void identity_dfs(EnumWalk& w, int remaining, IdentityReport& rep) {
    if (remaining == 0) {
        ++rep.leaves;
        int d = w.depth();
        for (int64_t x = -d - 1; x <= d + 1; ++x)
            if (!identity_holds_at(w, x)) ++rep.violations;
        return;
    }
    for (int step : {1, -1}) {
        int64_t oldpos = w.pos();
        w.push(step);
        // A step only perturbs the ledger at the sites next to the move and
        // at the old position (indicator), so these four checks extend the
        // inductive guarantee from the parent node.
        int64_t p = w.pos();
        for (int64_t x : {p - 1, p, p + 1, oldpos})
            if (!identity_holds_at(w, x)) ++rep.violations;
        identity_dfs(w, remaining - 1, rep);
        w.pop();
    }
}

} // namespace

IdentityReport verify_identity_exhaustive(int n) {
    if (n < 1 || n > 20) throw std::invalid_argument("n out of range");
    EnumWalk w(n);
    IdentityReport rep;
    identity_dfs(w, n, rep);
    return rep;
}

Rational ProfileLaw::prob(const std::vector<int64_t>& key) const {
    auto it = mass.find(key);
    if (it == mass.end()) return Rational(0);
    return dyadic(it->second, denom_exp);
}

Rational ProfileLaw::residual_prob() const { return dyadic(residual, denom_exp); }

namespace {

struct StopLawCtx {
    int64_t x;
    int64_t k;
    int64_t wlo, whi;
    int n_cap;
    Field field;
    ProfileLaw* out;
};

void stopped_dfs(EnumWalk& w, StopLawCtx& c) {
    int t = w.depth();
    if (t > 0 && w.last_step() == 1 && w.pos() == c.x &&
        w.U(c.x) == c.k + 1) {
        std::vector<int64_t> key;
        key.reserve(static_cast<size_t>(c.whi - c.wlo + 1));
        for (int64_t y = c.wlo; y <= c.whi; ++y)
            key.push_back(c.field == Field::downcross ? w.D(y) : w.L(y));
        c.out->mass[key] += pow2(c.n_cap - t);
        return; // stopped: the whole subtree carries this mass
    }
    if (t == c.n_cap) {
        c.out->residual += 1;
        return;
    }
    w.push(1);
    stopped_dfs(w, c);
    w.pop();
    w.push(-1);
    stopped_dfs(w, c);
    w.pop();
}

} // namespace

ProfileLaw stopped_profile_law(int64_t x, int64_t k,
                               std::pair<int64_t, int64_t> window, int n_cap,
                               Field field) {
    if (n_cap < 1 || n_cap > 26) throw std::invalid_argument("n_cap out of range");
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    if (window.first > window.second)
        throw std::invalid_argument("empty window");
    ProfileLaw law;
    law.x = x;
    law.k = k;
    law.n_cap = n_cap;
    law.field = field;
    law.denom_exp = n_cap;
    for (int64_t y = window.first; y <= window.second; ++y)
        law.window.push_back(y);
    EnumWalk w(n_cap);
    StopLawCtx c{x, k, window.first, window.second, n_cap, field, &law};
    stopped_dfs(w, c);
    return law;
}

namespace {

struct EventCtx {
    int64_t x;
    int64_t ustar;
    int64_t ceil_pos;
    int64_t sum;
    std::vector<std::pair<int64_t, int64_t>> supp; // (site, target)
    int tstar;
    uint64_t count = 0;
};

// Downcross targets enforced on the way (never exceeded), so at a trigger
// the field matches iff the running downcross total has reached sum(ell).
void event_dfs(EnumWalk& w, int64_t sumD, EventCtx& c) {
    if (w.depth() >= c.tstar) return;
    int64_t p = w.pos();
    // up step
    int64_t up = p + 1;
    if (up <= c.ceil_pos) {
        if (up == c.x && w.U(c.x) + 1 == c.ustar) {
            if (sumD == c.sum) ++c.count;
            // Either way the subtree is dead: a later trigger would need
            // one more downcross at x-1 than the target allows.
        } else {
            w.push(1);
            event_dfs(w, sumD, c);
            w.pop();
        }
    }
    // down step
    int64_t dn = p - 1;
    int64_t target = 0;
    for (const auto& [s, v] : c.supp)
        if (s == dn) {
            target = v;
            break;
        }
    if (w.D(dn) < target) {
        w.push(-1);
        event_dfs(w, sumD + 1, c);
        w.pop();
    }
}

} // namespace

Rational profile_event_prob(int64_t x, const std::map<int64_t, int64_t>& ell) {
    EventCtx c;
    c.x = x;
    c.sum = 0;
    int64_t maxs = x > 0 ? x : 0;
    for (const auto& [y, v] : ell) {
        if (v < 0) throw std::invalid_argument("negative crossing count");
        if (v == 0) continue;
        c.supp.emplace_back(y, v);
        c.sum += v;
        maxs = std::max(maxs, y);
    }
    auto at = [&](int64_t y) -> int64_t {
        auto it = ell.find(y);
        return it == ell.end() ? 0 : it->second;
    };
    c.ustar = at(x - 1) + (x >= 1 ? 1 : 0);
    if (c.ustar == 0) return Rational(0);
    int64_t tstar64 = 2 * c.sum + x;
    if (tstar64 < 1 || tstar64 > 34)
        throw std::invalid_argument("decision time out of supported range");
    c.tstar = static_cast<int>(tstar64);
    c.ceil_pos = maxs + 1;
    EnumWalk w(c.tstar);
    event_dfs(w, 0, c);
    return dyadic(BigInt(c.count), c.tstar);
}

namespace {

struct TrigSpec {
    int64_t x;
    int tstar;
    int64_t ustar;
    std::vector<std::pair<int64_t, int64_t>> supp;
};

struct MultiCtx {
    std::vector<TrigSpec> trig;
    MultiHitReport rep;
};

void multi_dfs(EnumWalk& w, int remaining, int hits, MultiCtx& c) {
    if (remaining == 0) {
        ++c.rep.leaves;
        if (hits == 1) ++c.rep.single;
        if (hits >= 2) ++c.rep.multi;
        return;
    }
    for (int step : {1, -1}) {
        w.push(step);
        int add = 0;
        if (step == 1) {
            int64_t p = w.pos();
            int t = w.depth();
            for (const auto& e : c.trig) {
                if (e.x != p || e.tstar != t || w.U(p) != e.ustar) continue;
                bool match = true;
                for (const auto& [s, v] : e.supp)
                    if (w.D(s) != v) {
                        match = false;
                        break;
                    }
                if (match) {
                    add = 1;
                    break;
                }
            }
        }
        multi_dfs(w, remaining - 1, hits + add, c);
        w.pop();
    }
}

} // namespace

MultiHitReport count_multi_realized(const std::vector<PathEvent>& events,
                                    int n) {
    if (n < 1 || n > 22) throw std::invalid_argument("n out of range");
    MultiCtx c;
    for (const auto& ev : events) {
        TrigSpec e;
        e.x = ev.x;
        int64_t sum = 0;
        for (const auto& [y, v] : ev.ell) {
            if (v < 0) throw std::invalid_argument("negative crossing count");
            if (v == 0) continue;
            e.supp.emplace_back(y, v);
            sum += v;
        }
        int64_t us = 0;
        auto it = ev.ell.find(ev.x - 1);
        if (it != ev.ell.end()) us = it->second;
        e.ustar = us + (ev.x >= 1 ? 1 : 0);
        int64_t ts = 2 * sum + ev.x;
        e.tstar = static_cast<int>(ts);
        if (ts >= 1 && ts <= n && e.ustar >= 1) c.trig.push_back(e);
        // Events whose decision time exceeds the horizon can never fire
        // within it; they contribute nothing to the audit.
    }
    EnumWalk w(n);
    multi_dfs(w, n, 0, c);
    c.rep.pass = c.rep.multi == 0;
    return c.rep;
}

} // namespace favsites::enumerate
