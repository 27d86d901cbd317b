#include "favsites/chains.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

namespace favsites::chains {

using kernels::KernelId;

ChainTrajectory simulate_chain(KernelId kernel, int64_t start,
                               const ChainStopRule& rule,
                               rng::Xoshiro256pp& g) {
    if (start < 0) throw std::invalid_argument("simulate_chain: start < 0");
    if (rule.kind == ChainStopRule::extinction && kernel != KernelId::pi)
        throw std::invalid_argument(
            "simulate_chain: only the pi chain dies; extinction stop rejected");
    if ((rule.kind == ChainStopRule::hit_ge_h ||
         rule.kind == ChainStopRule::tilde_hit_ge_h) &&
        rule.h < 1)
        throw std::invalid_argument("simulate_chain: hit rules need h >= 1");

    ChainTrajectory traj;
    traj.kernel = kernel;
    traj.states.push_back(start);
    int64_t tilde_add = kernel == KernelId::rho ? 1 : 0;

    auto mark = [&](uint64_t t) {
        int64_t z = traj.states[t];
        if (!traj.hit_time && rule.h > 0 && z >= rule.h) traj.hit_time = t;
        if (!traj.extinction_time && kernel == KernelId::pi && z == 0)
            traj.extinction_time = t;
        if (t >= 1 && !traj.tilde_hit_time && rule.h > 0 &&
            z + traj.states[t - 1] + tilde_add >= rule.h)
            traj.tilde_hit_time = t;
    };
    auto stopped = [&]() {
        switch (rule.kind) {
        case ChainStopRule::hit_ge_h: return traj.hit_time.has_value();
        case ChainStopRule::extinction: return traj.extinction_time.has_value();
        case ChainStopRule::fixed_length:
            return traj.states.size() > rule.length;
        case ChainStopRule::tilde_hit_ge_h:
            return traj.tilde_hit_time.has_value();
        }
        return true;
    };

    mark(0);
    while (!stopped()) {
        if (traj.states.size() > rule.hard_cap) {
            traj.capped = true;
            break;
        }
        int64_t next = kernels::sample(kernel, traj.states.back(), g);
        traj.states.push_back(next);
        mark(traj.states.size() - 1);
    }
    return traj;
}

PatchedProfile patched_profile(int64_t x, int64_t k, Boundary variant,
                               rng::Xoshiro256pp& g, uint64_t tail_cap) {
    if (k < 0) throw std::invalid_argument("patched_profile: k < 0");
    std::map<int64_t, int64_t> field;
    bool capped = false;

    auto run_tail = [&](int64_t from_site, int64_t from_value, int64_t dir) {
        // pi chain away from the core until it dies out
        int64_t v = from_value;
        int64_t y = from_site;
        uint64_t steps = 0;
        while (v > 0) {
            if (++steps > tail_cap) {
                capped = true;
                break;
            }
            v = kernels::sample(KernelId::pi, v, g);
            y += dir;
            if (v != 0) field[y] = v;
        }
    };

    if (x >= 1) {
        // Core: Z-steps from site x-1 down to 0, seeded at k.
        field[x - 1] = k;
        int64_t v = k;
        for (int64_t y = x - 2; y >= 0; --y) {
            v = kernels::sample(KernelId::rho, v, g);
            field[y] = v;
        }
        // Seam step to site -1, then a pi tail below.
        KernelId seam = variant == Boundary::origin_immigration ? KernelId::rho
                                                                : KernelId::pi;
        int64_t vm1 = kernels::sample(seam, field[0], g);
        if (vm1 != 0) field[-1] = vm1;
        run_tail(-1, vm1, -1);
        // Right tail: pi from the anchor value at x-1 upward.
        run_tail(x - 1, k, +1);
    } else {
        // Left seed at site x-1; under origin immigration the walk law
        // forces one extra crossing there.
        int64_t seed = k + (variant == Boundary::origin_immigration ? 1 : 0);
        if (seed != 0) field[x - 1] = seed;
        run_tail(x - 1, seed, -1);
        // Inner stretch x..-1 with rho* steps, then the origin pi step.
        int64_t v = seed;
        for (int64_t y = x; y <= -1; ++y) {
            v = kernels::sample(KernelId::rhostar, v, g);
            if (v != 0) field[y] = v;
        }
        int64_t v0 = kernels::sample(KernelId::pi, v, g);
        if (v0 != 0) field[0] = v0;
        run_tail(0, v0, +1);
    }

    PatchedProfile out;
    out.x = x;
    out.k = k;
    out.variant = variant;
    out.capped = capped;
    while (!field.empty() && field.begin()->second == 0) field.erase(field.begin());
    while (!field.empty() && field.rbegin()->second == 0)
        field.erase(std::prev(field.end()));
    if (field.empty()) {
        out.lo = 0;
    } else {
        out.lo = field.begin()->first;
        int64_t hi = field.rbegin()->first;
        out.delta.assign(static_cast<size_t>(hi - out.lo + 1), 0);
        for (const auto& [y, v] : field) out.delta[static_cast<size_t>(y - out.lo)] = v;
    }
    return out;
}

namespace {

struct BucketIndex {
    std::map<std::vector<int64_t>, int64_t> idx;
    stats::Pmf expected;
};

BucketIndex index_law(const enumerate::ProfileLaw& law) {
    BucketIndex b;
    int64_t next = 0;
    for (const auto& [key, m] : law.mass) {
        b.idx[key] = next;
        b.expected.p[next] = dyadic(m, law.denom_exp).get_d();
        ++next;
    }
    b.expected.residual = law.residual_prob().get_d();
    return b;
}

} // namespace

CouplingReport rk_coupling_test(int64_t x, int64_t k,
                                std::pair<int64_t, int64_t> window,
                                uint64_t samples, int n_cap, Boundary variant,
                                uint64_t seed) {
    auto law_d = enumerate::stopped_profile_law(x, k, window, n_cap,
                                                enumerate::Field::downcross);
    auto law_l = enumerate::stopped_profile_law(x, k, window, n_cap,
                                                enumerate::Field::localtime);
    BucketIndex bd = index_law(law_d);
    BucketIndex bl = index_law(law_l);

    stats::Counts cd, cl;
    uint64_t alien_d = 0, alien_l = 0;
    auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, 0, "rk-coupling"));
    std::vector<int64_t> key;
    key.reserve(static_cast<size_t>(window.second - window.first + 1));
    for (uint64_t s = 0; s < samples; ++s) {
        PatchedProfile prof = patched_profile(x, k, variant, g);
        if (prof.capped || prof.decision_time() > n_cap) {
            ++cd.residual;
            ++cl.residual;
            continue;
        }
        key.clear();
        for (int64_t y = window.first; y <= window.second; ++y)
            key.push_back(prof.value(y));
        auto it = bd.idx.find(key);
        if (it == bd.idx.end()) {
            ++alien_d; // sampled a field the walk law cannot produce
        } else {
            ++cd.n[it->second];
        }
        key.clear();
        for (int64_t y = window.first; y <= window.second; ++y)
            key.push_back(prof.lambda(y));
        it = bl.idx.find(key);
        if (it == bl.idx.end()) {
            ++alien_l;
        } else {
            ++cl.n[it->second];
        }
    }

    auto tv_with_alien = [&](const stats::Counts& c, const stats::Pmf& exp,
                             uint64_t alien) {
        double n = static_cast<double>(samples);
        double s = std::abs(static_cast<double>(c.residual) / n - exp.residual) +
                   static_cast<double>(alien) / n;
        for (const auto& [b, pk] : exp.p) {
            auto it = c.n.find(b);
            double o = it == c.n.end() ? 0.0 : static_cast<double>(it->second);
            s += std::abs(o / n - pk);
        }
        return 0.5 * s;
    };

    CouplingReport rep;
    rep.tv_crossing = tv_with_alien(cd, bd.expected, alien_d);
    rep.tv_vertex = tv_with_alien(cl, bl.expected, alien_l);
    // Alien buckets carry expected probability zero; feeding them through
    // as an unexpected key makes the test fail, which is the right verdict.
    if (alien_d) cd.n[-1] = alien_d;
    if (alien_l) cl.n[-1] = alien_l;
    rep.crossing_form = stats::chi_square(cd, bd.expected);
    rep.vertex_form = stats::chi_square(cl, bl.expected);
    rep.inconclusive = samples < 100;
    return rep;
}

MartingaleSeq martingale_functionals(const ChainTrajectory& traj) {
    if (traj.kernel != KernelId::rho)
        throw std::invalid_argument("martingale_functionals: rho chains only");
    MartingaleSeq seq;
    size_t n = traj.states.size();
    seq.m.resize(n);
    seq.four_m_prime.resize(n);
    int64_t run = 0; // sum_{s<=t} (Z_s - s)
    for (size_t t = 0; t < n; ++t) {
        int64_t z = traj.states[t];
        int64_t tt = static_cast<int64_t>(t);
        if (t >= 1) run += z - tt;
        seq.m[t] = run - tt * (z - tt);
        seq.four_m_prime[t] = -z * z + 4 * tt * z - 2 * tt * tt + tt;
    }
    return seq;
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

} // namespace

EfracResult efrac_estimate(int64_t h, int64_t k, uint64_t reps, uint64_t seed,
                           int workers) {
    if (h < 4) throw std::invalid_argument("efrac_estimate: h must be >= 4");
    double sh = std::sqrt(static_cast<double>(h));
    if (k < 0 || k < h - 2 * sh || k > h - sh)
        throw std::invalid_argument("efrac_estimate: k outside [h-2sqrt(h), h-sqrt(h)]");
    std::vector<double> frac(reps);
    replica_parallel(reps, workers, [&](uint64_t r) {
        auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, r, "efrac"));
        int64_t z = k;
        int64_t acc = 0;
        while (true) {
            z = kernels::sample(KernelId::rho, z, g);
            acc += h - z; // final (possibly negative) overshoot term included
            if (z >= h) break;
        }
        frac[r] = static_cast<double>(acc) / static_cast<double>(h);
    });
    EfracResult out;
    out.h = h;
    out.k = k;
    out.sum_frac = stats::mean_ci(frac);
    out.ratio_to_sqrt_h = out.sum_frac.mean / sh;
    return out;
}

OvershootResult overshoot_experiment_y(int64_t h, int64_t u, int64_t k,
                                       uint64_t reps, uint64_t seed,
                                       uint64_t min_survivors) {
    if (!(0 <= k && k <= h && h <= u))
        throw std::invalid_argument("overshoot: need 0 <= k <= h <= u");
    auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, 0, "overshoot-y"));
    uint64_t survivors = 0, above = 0;
    for (uint64_t r = 0; r < reps; ++r) {
        int64_t y = k;
        while (y > 0 && y < h) y = kernels::sample(KernelId::pi, y, g);
        if (y >= h) {
            ++survivors;
            if (y >= u) ++above;
        }
    }
    OvershootResult out;
    out.reps = reps;
    out.survivors = survivors;
    out.inconclusive = survivors < min_survivors;
    if (survivors > 0) {
        out.lhs = static_cast<double>(above) / static_cast<double>(survivors);
        out.se = std::sqrt(out.lhs * (1 - out.lhs) /
                           static_cast<double>(survivors));
    }
    // Worst-case single-step tail ratio at the boundary row h.
    Rational num = Rational(1) - kernels::cdf_exact(KernelId::pi, h, u - 1);
    Rational den = Rational(1) - kernels::cdf_exact(KernelId::pi, h, h - 1);
    out.rhs = num / den;
    return out;
}

OvershootResult overshoot_experiment_z(int64_t h, int64_t u, int64_t k,
                                       uint64_t reps, uint64_t seed) {
    if (!(0 <= k && k <= h && h <= u))
        throw std::invalid_argument("overshoot: need 0 <= k <= h <= u");
    auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, 0, "overshoot-z"));
    uint64_t above = 0;
    for (uint64_t r = 0; r < reps; ++r) {
        int64_t z = k;
        while (z < h) z = kernels::sample(KernelId::rho, z, g);
        if (z >= u) ++above;
    }
    OvershootResult out;
    out.reps = reps;
    out.survivors = reps; // the immigration chain always reaches h
    out.lhs = reps ? static_cast<double>(above) / static_cast<double>(reps) : 0;
    out.se = reps ? std::sqrt(out.lhs * (1 - out.lhs) / static_cast<double>(reps)) : 0;
    out.inconclusive = reps == 0;
    Rational num = Rational(1) - kernels::cdf_exact(KernelId::rho, h, u - 1);
    Rational den = Rational(1) - kernels::cdf_exact(KernelId::rho, h, h - 1);
    out.rhs = num / den;
    return out;
}

EtauResult etau_check(int64_t h, int64_t k, uint64_t reps, uint64_t seed,
                      int workers) {
    if (!(0 <= k && k < h)) throw std::invalid_argument("etau_check: need 0 <= k < h");
    std::vector<double> tau(reps), gain(reps);
    replica_parallel(reps, workers, [&](uint64_t r) {
        auto g = rng::Xoshiro256pp::seeded(rng::derive_seed(seed, r, "etau"));
        int64_t z = k;
        uint64_t t = 0;
        while (z < h) {
            z = kernels::sample(KernelId::rho, z, g);
            ++t;
        }
        tau[r] = static_cast<double>(t);
        gain[r] = static_cast<double>(z - k);
    });
    EtauResult out;
    out.tau = stats::mean_ci(tau);
    out.z_gain = stats::mean_ci(gain);
    out.ci_overlap = stats::ci_overlap(out.tau, out.z_gain);
    out.lower_bound_ok =
        out.tau.mean >= static_cast<double>(h - k) - 3 * out.tau.se;
    return out;
}

} // namespace favsites::chains
