#include "favsites/profiles.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "favsites/enumerate.hpp"
#include "favsites/kernels.hpp"
#include "favsites/walk.hpp"

namespace favsites::profiles {

bool is_admissible(const CrossingProfile& ell, const EventFamily& fam) {
    const int64_t x = fam.x, h = fam.h, k = fam.k;
    if (ell.x != x || h < 1 || k < 0 || h - k - 1 < 0) return false;
    if (ell.value(x - 1) != k) return false;
    if (ell.value(x) != h - k - 1) return false;
    if (ell.value(x + 1) != k + 1) return false;
    if (ell.value(x + 2) != h - k - 1) return false;
    if (ell.support.empty()) return false; // x+1 always carries k+1 >= 1
    // Every adjacent pair away from the pattern columns stays below h.
    int64_t lo = ell.support.begin()->first;
    int64_t hi = ell.support.rbegin()->first + 1;
    for (int64_t i = lo; i <= hi; ++i) {
        if (i == x || i == x + 1 || i == x + 2) continue;
        if (ell.value(i - 1) + ell.value(i) >= h) return false;
    }
    return true;
}

CrossingProfile minimal_member(const EventFamily& fam) {
    if (fam.h < 1 || fam.k < 0 || fam.h - fam.k - 1 < 0)
        throw std::invalid_argument("minimal_member: need 0 <= k <= h-1");
    CrossingProfile ell;
    ell.x = fam.x;
    ell.set(fam.x - 1, fam.k);
    ell.set(fam.x, fam.h - fam.k - 1);
    ell.set(fam.x + 1, fam.k + 1);
    ell.set(fam.x + 2, fam.h - fam.k - 1);
    return ell;
}

ProbabilityBreakdown profile_probability_diag(const CrossingProfile& ell,
                                              Boundary variant) {
    ProbabilityBreakdown out;
    out.p = Rational(1);
    bool dead = false;
    auto mul = [&](kernels::KernelId kid, int64_t i, int64_t j, int64_t site) {
        if (dead) return;
        Rational f = kernels::prob_exact(kid, i, j);
        if (f == 0) {
            dead = true;
            out.p = 0;
            out.first_zero_factor = std::string(kernels::name(kid)) + "(" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ") into site " + std::to_string(site);
        } else {
            out.p *= f;
        }
    };

    const int64_t x = ell.x;
    const bool empty = ell.support.empty();
    const int64_t lo = empty ? x : ell.support.begin()->first;
    const int64_t hi = empty ? x : ell.support.rbegin()->first;

    if (x >= 1) {
        // Right tail from the anchor column.
        int64_t rmax = std::max(hi, x - 1);
        for (int64_t y = x - 1; y <= rmax; ++y)
            mul(kernels::KernelId::pi, ell.value(y), ell.value(y + 1), y + 1);
        // Immigration chain down to the origin.
        for (int64_t y = x - 2; y >= 0; --y)
            mul(kernels::KernelId::rho, ell.value(y + 1), ell.value(y), y);
        // Seam across the origin, then the plain left tail.
        mul(variant == Boundary::origin_immigration ? kernels::KernelId::rho
                                                    : kernels::KernelId::pi,
            ell.value(0), ell.value(-1), -1);
        int64_t lmin = std::min(lo, int64_t{-1});
        for (int64_t y = -1; y >= lmin; --y)
            mul(kernels::KernelId::pi, ell.value(y), ell.value(y - 1), y - 1);
    } else {
        // The trigger needs at least one arrival from the left.
        if (ell.value(x - 1) < 1) {
            out.p = 0;
            out.first_zero_factor = "value(x-1) = 0: no trigger";
            return out;
        }
        int64_t lmin = std::min(lo, x - 1);
        for (int64_t y = x - 1; y >= lmin; --y)
            mul(kernels::KernelId::pi, ell.value(y), ell.value(y - 1), y - 1);
        for (int64_t y = x; y <= -1; ++y)
            mul(kernels::KernelId::rhostar, ell.value(y - 1), ell.value(y), y);
        mul(kernels::KernelId::pi, ell.value(-1), ell.value(0), 0);
        int64_t rmax = std::max(hi, int64_t{0});
        for (int64_t y = 0; y <= rmax; ++y)
            mul(kernels::KernelId::pi, ell.value(y), ell.value(y + 1), y + 1);
    }
    return out;
}

Rational profile_probability(const CrossingProfile& ell, Boundary variant) {
    return profile_probability_diag(ell, variant).p;
}

std::vector<CrossingProfile> perturbations(const CrossingProfile& ell,
                                           size_t cap) {
    const int64_t a_max = ell.value(ell.x + 1);
    const int64_t b_max = ell.value(ell.x + 2);
    if (a_max > 0 && b_max > 0 &&
        static_cast<uint64_t>(a_max) * static_cast<uint64_t>(b_max) > cap)
        throw std::invalid_argument("perturbations: candidate set too large");
    std::vector<CrossingProfile> out;
    for (int64_t a = 0; a < a_max; ++a)
        for (int64_t b = 0; b < b_max; ++b) {
            CrossingProfile q = ell;
            q.set(ell.x + 1, a);
            q.set(ell.x + 2, b);
            if (profile_probability(q) > 0) out.push_back(q);
        }
    return out;
}

Rational perturbation_mass(const CrossingProfile& ell, Boundary variant) {
    Rational s = 0;
    for (const auto& q : perturbations(ell)) s += profile_probability(q, variant);
    return s;
}

Rational fluc_ratio(const CrossingProfile& ell, const EventFamily& fam,
                    Boundary variant) {
    if (!is_admissible(ell, fam))
        throw std::invalid_argument("fluc_ratio: profile not in the family");
    if (!walk::in_I_h(fam.h, fam.k))
        throw std::invalid_argument("fluc_ratio: k outside the height band");
    Rational base = profile_probability(ell, variant);
    if (base == 0) throw std::domain_error("fluc_ratio: base profile has probability 0");
    return perturbation_mass(ell, variant) / (Rational(fam.h) * base);
}

DisjointnessReport disjointness_check(const std::vector<CrossingProfile>& events,
                                      int n) {
    std::vector<enumerate::PathEvent> evs;
    std::set<CrossingProfile> seen;
    for (const auto& e : events)
        if (seen.insert(e).second) evs.push_back({e.x, e.support});
    auto rep = enumerate::count_multi_realized(evs, n);
    DisjointnessReport out;
    out.events = evs.size();
    out.leaves = rep.leaves;
    out.single = rep.single;
    out.multi = rep.multi;
    out.pass = rep.pass;
    return out;
}

namespace {

template <class F>
void replica_parallel(uint64_t reps, int workers, F&& f) {
    if (workers <= 1) {
        for (uint64_t r = 0; r < reps; ++r) f(r);
        return;
    }
    std::atomic<uint64_t> next{0};
    std::vector<std::thread> pool;
    int nw = std::min<int>(workers, 64);
    pool.reserve(static_cast<size_t>(nw));
    for (int i = 0; i < nw; ++i)
        pool.emplace_back([&]() {
            for (uint64_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1))
                f(r);
        });
    for (auto& th : pool) th.join();
}

// Fair-coin steps drawn 64 at a time.
struct CoinBuf {
    rng::Xoshiro256pp* g;
    uint64_t bits = 0;
    int left = 0;
    int step() {
        if (left == 0) {
            bits = g->next();
            left = 64;
        }
        int s = (bits & 1) ? 1 : -1;
        bits >>= 1;
        --left;
        return s;
    }
};

} // namespace

NhEstimate nh_direct_estimate(int64_t H, uint64_t t_max, uint64_t reps,
                              uint64_t seed, int workers) {
    if (H < 1) throw std::invalid_argument("nh_direct_estimate: H >= 1");
    if (reps < 1) throw std::invalid_argument("nh_direct_estimate: reps >= 1");
    std::vector<double> n_per(reps, 0.0);
    std::vector<uint64_t> f3(reps, 0);
    replica_parallel(reps, workers, [&](uint64_t r) {
        walk::StopRule rule;
        rule.kind = walk::StopRule::fixed_steps;
        rule.t_max = t_max;
        rule.H = H;
        auto s = walk::simulate(rng::derive_seed(seed, r, "nh-direct"), rule);
        n_per[r] = static_cast<double>(s.a_hits);
        f3[r] = s.f.size() > 3 ? s.f[3] : 0;
    });
    NhEstimate out;
    out.n_per_run = stats::mean_ci(n_per);
    out.reps = reps;
    for (uint64_t r = 0; r < reps; ++r) {
        out.total_hits += static_cast<uint64_t>(n_per[r]);
        out.f3_total += f3[r];
    }
    return out;
}

std::vector<CellEstimate>
a_event_frequencies(const std::vector<std::array<int64_t, 3>>& cells,
                    uint64_t t_cap, uint64_t reps, uint64_t seed, int workers) {
    if (cells.empty() || cells.size() > 32)
        throw std::invalid_argument("a_event_frequencies: 1..32 cells");
    if (reps < 1) throw std::invalid_argument("a_event_frequencies: reps >= 1");
    int64_t hmax = 0;
    std::map<std::tuple<int64_t, int64_t, int64_t>, int> cell_idx;
    std::map<int64_t, int64_t> budget; // site -> upcrossings after which it is spent
    for (size_t i = 0; i < cells.size(); ++i) {
        auto [x, h, k] = cells[i];
        if (x < 1 || h < 1 || k < 0)
            throw std::invalid_argument("a_event_frequencies: need x >= 1, h >= 1, k >= 0");
        if (!cell_idx.emplace(std::make_tuple(x, h, k), static_cast<int>(i)).second)
            throw std::invalid_argument("a_event_frequencies: duplicate cell");
        hmax = std::max(hmax, h);
        auto& b = budget[x];
        b = std::max(b, k + 1);
    }

    std::vector<uint32_t> masks(reps, 0);
    replica_parallel(reps, workers, [&](uint64_t r) {
        auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, r, "a-cells"));
        CoinBuf coin{&g};
        walk::WalkObservables w;
        uint32_t mask = 0;
        size_t open_sites = budget.size();
        // Stop once nothing can fire any more: the running maximum passed
        // every cell height, or every tracked upcrossing budget is spent.
        // The time cap is a safety net; a late trigger at these heights
        // needs a linear-size range and has exponentially small mass.
        while (w.max_local_time() <= hmax && open_sites > 0 && w.t() < t_cap) {
            auto ev = w.advance(coin.step());
            if (!ev) continue;
            auto bit = budget.find(ev->x);
            if (bit != budget.end() && ev->k + 1 == bit->second) --open_sites;
            auto cit = cell_idx.find(std::make_tuple(ev->x, ev->h, ev->k));
            if (cit == cell_idx.end()) continue;
            const int64_t h = ev->h;
            if (w.argmax_count() == 3 && w.max_local_time() == h &&
                w.L(ev->x + 1) == h && w.L(ev->x + 2) == h)
                mask |= 1u << cit->second;
        }
        masks[r] = mask;
    });

    std::vector<CellEstimate> out(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
        out[i].x = cells[i][0];
        out[i].h = cells[i][1];
        out[i].k = cells[i][2];
        out[i].reps = reps;
    }
    for (uint64_t r = 0; r < reps; ++r)
        for (size_t i = 0; i < cells.size(); ++i)
            if (masks[r] & (1u << i)) ++out[i].hits;
    for (auto& c : out)
        c.phat = static_cast<double>(c.hits) / static_cast<double>(c.reps);
    return out;
}

SecondMomentReport second_moment_diagnostic(int64_t H, uint64_t t_max,
                                            uint64_t reps, uint64_t seed,
                                            int workers) {
    if (H < 2) throw std::invalid_argument("second_moment_diagnostic: H >= 2");
    if (reps < 1) throw std::invalid_argument("second_moment_diagnostic: reps >= 1");
    struct Acc {
        uint32_t n = 0;
        uint32_t near = 0;
        uint32_t far = 0;
    };
    std::vector<Acc> acc(reps);
    replica_parallel(reps, workers, [&](uint64_t r) {
        auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, r, "second-moment"));
        CoinBuf coin{&g};
        walk::WalkObservables w;
        std::vector<int64_t> xs;
        // Every counted event happens while the maximum is still <= H.
        while (w.max_local_time() <= H && w.t() < t_max) {
            auto ev = w.advance(coin.step());
            if (!ev) continue;
            if (auto hit = walk::detect_A_event(*ev, w, H)) xs.push_back(hit->x);
        }
        Acc a;
        a.n = static_cast<uint32_t>(xs.size());
        for (size_t i = 0; i < xs.size(); ++i)
            for (size_t j = i + 1; j < xs.size(); ++j)
                (std::llabs(xs[i] - xs[j]) <= 3 ? a.near : a.far) += 1;
        acc[r] = a;
    });

    SecondMomentReport out;
    out.reps = reps;
    double sn = 0, sn2 = 0, snear = 0, sfar = 0;
    for (const auto& a : acc) {
        sn += a.n;
        sn2 += static_cast<double>(a.n) * a.n;
        snear += a.near;
        sfar += a.far;
        out.total_hits += a.n;
    }
    const double dr = static_cast<double>(reps);
    out.mean_n = sn / dr;
    out.mean_n2 = sn2 / dr;
    out.near_pairs_mean = snear / dr;
    out.far_pairs_mean = sfar / dr;
    if (out.total_hits == 0) {
        out.inconclusive = true;
        return out;
    }
    out.ratio = out.mean_n2 / (out.mean_n * std::log(static_cast<double>(H)));
    const double pair_part = 2.0 * (out.near_pairs_mean + out.far_pairs_mean);
    if (pair_part > 0) {
        out.near_share = 2.0 * out.near_pairs_mean / pair_part;
        out.far_share = 2.0 * out.far_pairs_mean / pair_part;
    }
    return out;
}

} // namespace favsites::profiles
