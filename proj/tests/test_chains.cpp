#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "favsites/chains.hpp"
#include "favsites/kernels.hpp"
#include "favsites/rng.hpp"
#include "favsites/stats.hpp"

using namespace favsites;
using kernels::KernelId;

TEST_CASE("fixed-length chain runs exactly length steps") {
    auto g = rng::Xoshiro256pp::seeded(1);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::fixed_length;
    rule.length = 25;
    auto traj = chains::simulate_chain(KernelId::rho, 2, rule, g);
    CHECK(traj.states.size() == 26);
    CHECK(traj.states[0] == 2);
    CHECK_FALSE(traj.capped);
}

TEST_CASE("extinction rule only makes sense for the critical kernel") {
    auto g = rng::Xoshiro256pp::seeded(2);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::extinction;
    CHECK_THROWS(chains::simulate_chain(KernelId::rho, 1, rule, g));
    CHECK_THROWS(chains::simulate_chain(KernelId::rhostar, 1, rule, g));
    for (int r = 0; r < 200; ++r) {
        auto traj = chains::simulate_chain(KernelId::pi, 2, rule, g);
        if (traj.capped) continue;
        REQUIRE(traj.extinction_time.has_value());
        CHECK(traj.states.back() == 0);
    }
}

TEST_CASE("hit rule stops at the ceiling") {
    auto g = rng::Xoshiro256pp::seeded(3);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::hit_ge_h;
    rule.h = 5;
    for (int r = 0; r < 200; ++r) {
        auto traj = chains::simulate_chain(KernelId::rho, 0, rule, g);
        REQUIRE(traj.hit_time.has_value());
        CHECK(traj.states.back() >= 5);
        CHECK(*traj.hit_time == traj.states.size() - 1);
        for (size_t t = 0; t + 1 < traj.states.size(); ++t)
            CHECK(traj.states[t] < 5);
    }
}

TEST_CASE("first passage time of the drifting chain to level 1") {
    // From 0, each step lands >= 1 with probability 1/2, so the passage
    // time is geometric with mean 2.
    auto g = rng::Xoshiro256pp::seeded(4);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::hit_ge_h;
    rule.h = 1;
    std::vector<double> taus;
    for (int r = 0; r < 30000; ++r) {
        auto traj = chains::simulate_chain(KernelId::rho, 0, rule, g);
        REQUIRE(traj.hit_time.has_value());
        taus.push_back(double(*traj.hit_time));
    }
    auto ci = stats::mean_ci(taus);
    CHECK(ci.lo <= 2.0);
    CHECK(2.0 <= ci.hi);
}

TEST_CASE("pair-sum stopping records the first offending step") {
    auto g = rng::Xoshiro256pp::seeded(5);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::tilde_hit_ge_h;
    rule.h = 6;
    for (int r = 0; r < 200; ++r) {
        auto traj = chains::simulate_chain(KernelId::rho, 0, rule, g);
        REQUIRE(traj.tilde_hit_time.has_value());
        uint64_t t = *traj.tilde_hit_time;
        REQUIRE(t >= 1);
        REQUIRE(t < traj.states.size());
        CHECK(traj.states[t] + traj.states[t - 1] + 1 >= 6);
        for (uint64_t s = 1; s < t; ++s)
            CHECK(traj.states[s] + traj.states[s - 1] + 1 < 6);
    }
}

TEST_CASE("martingale functionals have zero drift for the drifting chain") {
    auto g = rng::Xoshiro256pp::seeded(6);
    chains::ChainStopRule rule;
    rule.kind = chains::ChainStopRule::fixed_length;
    rule.length = 15;
    const int64_t start = 2;
    std::vector<double> m_end, mp_end;
    for (int r = 0; r < 30000; ++r) {
        auto traj = chains::simulate_chain(KernelId::rho, start, rule, g);
        auto seq = chains::martingale_functionals(traj);
        REQUIRE(seq.m.size() == traj.states.size());
        REQUIRE(seq.four_m_prime.size() == traj.states.size());
        // The running sum starts at s=1, so both sequences are centered.
        CHECK(seq.m[0] == 0);
        CHECK(seq.four_m_prime[0] == -start * start);
        m_end.push_back(double(seq.m.back()));
        mp_end.push_back(double(seq.four_m_prime.back()));
    }
    auto cm = stats::mean_ci(m_end);
    CHECK(cm.lo <= 0.0);
    CHECK(0.0 <= cm.hi);
    auto cp = stats::mean_ci(mp_end);
    CHECK(cp.lo <= double(-start * start));
    CHECK(double(-start * start) <= cp.hi);
}

TEST_CASE("patched profile around a positive anchor") {
    // x=1, k=0: the anchor pins 0 at site 0; the right tail dies instantly
    // since pi from 0 is a point mass; the seam samples rho(0,.) which is
    // the one-geometric row.
    const uint64_t n = 40000;
    stats::Counts seam;
    auto g = rng::Xoshiro256pp::seeded(7);
    for (uint64_t r = 0; r < n; ++r) {
        auto prof =
            chains::patched_profile(1, 0, Boundary::origin_immigration, g);
        REQUIRE_FALSE(prof.capped);
        CHECK(prof.value(0) == 0);
        CHECK(prof.value(1) == 0);
        CHECK(prof.value(5) == 0);
        int64_t v = prof.value(-1);
        REQUIRE(v >= 0);
        if (v <= 25)
            ++seam.n[v];
        else
            ++seam.residual;
        CHECK(prof.decision_time() == 2 * prof.sum() + 1);
    }
    stats::Pmf expected;
    double acc = 0;
    for (int64_t j = 0; j <= 25; ++j) {
        expected.p[j] = kernels::prob(KernelId::pi, 1, j);
        acc += expected.p[j];
    }
    expected.residual = 1.0 - acc;
    auto rep = stats::chi_square(seam, expected);
    INFO("chi2=", rep.stat, " p=", rep.p_value);
    CHECK(rep.verdict == stats::Verdict::pass);
}

TEST_CASE("verbatim seam freezes the negative side at x=1, k=0") {
    auto g = rng::Xoshiro256pp::seeded(8);
    for (int r = 0; r < 2000; ++r) {
        auto prof = chains::patched_profile(1, 0, Boundary::verbatim, g);
        CHECK(prof.value(-1) == 0);
        CHECK(prof.value(-2) == 0);
    }
}

TEST_CASE("patched profile seam row shifts with the anchor value") {
    // x=1, k=2: the seam draws from rho(2,.) = pi(3,.).
    const uint64_t n = 40000;
    stats::Counts seam;
    auto g = rng::Xoshiro256pp::seeded(9);
    for (uint64_t r = 0; r < n; ++r) {
        auto prof =
            chains::patched_profile(1, 2, Boundary::origin_immigration, g);
        CHECK(prof.value(0) == 2);
        int64_t v = prof.value(-1);
        if (v <= 30)
            ++seam.n[v];
        else
            ++seam.residual;
    }
    stats::Pmf expected;
    double acc = 0;
    for (int64_t j = 0; j <= 30; ++j) {
        expected.p[j] = kernels::prob(KernelId::pi, 3, j);
        acc += expected.p[j];
    }
    expected.residual = 1.0 - acc;
    auto rep = stats::chi_square(seam, expected);
    INFO("chi2=", rep.stat, " p=", rep.p_value);
    CHECK(rep.verdict == stats::Verdict::pass);
}

TEST_CASE("vertex field of the patched profile") {
    auto g = rng::Xoshiro256pp::seeded(10);
    auto prof = chains::patched_profile(3, 1, Boundary::origin_immigration, g);
    // Inside (0, x] the vertex field adds the crossing indicator.
    CHECK(prof.lambda(1) == prof.value(1) + prof.value(0) + 1);
    CHECK(prof.lambda(3) == prof.value(3) + prof.value(2) + 1);
    CHECK(prof.lambda(4) == prof.value(4) + prof.value(3));
    CHECK(prof.lambda(-1) == prof.value(-1) + prof.value(-2));
}

TEST_CASE("coupling test separates the two seam conventions") {
    auto good = chains::rk_coupling_test(1, 0, {-2, 4}, 20000, 14,
                                         Boundary::origin_immigration, 99);
    REQUIRE_FALSE(good.inconclusive);
    CHECK(good.crossing_form.verdict == stats::Verdict::pass);
    CHECK(good.vertex_form.verdict == stats::Verdict::pass);
    CHECK(good.tv_crossing < 0.05);

    auto bad = chains::rk_coupling_test(1, 0, {-2, 4}, 20000, 14,
                                        Boundary::verbatim, 99);
    CHECK(bad.crossing_form.verdict == stats::Verdict::fail);
    CHECK(bad.tv_crossing > 0.4);
}

TEST_CASE("occupation fraction experiment guards its window") {
    CHECK_THROWS(chains::efrac_estimate(1, 0, 100, 1));
    CHECK_THROWS(chains::efrac_estimate(16, 2, 100, 1));  // k below window
    CHECK_THROWS(chains::efrac_estimate(16, 14, 100, 1)); // k above window
    auto r = chains::efrac_estimate(16, 10, 20000, 424242);
    CHECK(r.h == 16);
    CHECK(r.k == 10);
    CHECK(r.sum_frac.mean > 0);
    CHECK(r.ratio_to_sqrt_h > 0);
    CHECK(std::isfinite(r.ratio_to_sqrt_h));
}

TEST_CASE("overshoot bound fixture at ceiling 2") {
    // The exact bound is the single-step tail ratio at boundary row h.
    // Critical form, row pi(2,.): tail(3)/tail(2) = (5/16)/(1/2) = 5/8.
    auto y = chains::overshoot_experiment_y(2, 3, 1, 60000, 12);
    REQUIRE_FALSE(y.inconclusive);
    CHECK(y.rhs == Rational(5, 8));
    CHECK(y.survivors >= 1000);
    CHECK(y.survivors < y.reps); // rejection actually happened
    CHECK(y.lhs <= y.rhs.get_d() + 3 * y.se);

    // Drifting form, row rho(2,.) = pi(3,.): tail(3)/tail(2) = 8/11.
    auto z = chains::overshoot_experiment_z(2, 3, 1, 20000, 11);
    CHECK(z.rhs == Rational(8, 11));
    CHECK(z.survivors == z.reps); // no conditioning needed
    REQUIRE_FALSE(z.inconclusive);
    CHECK(z.lhs <= z.rhs.get_d() + 3 * z.se);
}

TEST_CASE("passage time checks against exact absorption values") {
    // Ceiling 1 from 0: tau is geometric with mean 2; ceiling 2 from 0:
    // the exact solve gives E tau = 16/5, transferred to the gain by the
    // centered martingale.
    auto r = chains::etau_check(1, 0, 30000, 13);
    CHECK(r.tau.lo <= 2.0);
    CHECK(2.0 <= r.tau.hi);
    CHECK(r.ci_overlap);
    CHECK(r.lower_bound_ok);

    auto r2 = chains::etau_check(2, 0, 30000, 14);
    CHECK(r2.tau.lo <= 3.2);
    CHECK(3.2 <= r2.tau.hi);
    CHECK(r2.z_gain.lo <= 3.2);
    CHECK(3.2 <= r2.z_gain.hi);
    CHECK(r2.ci_overlap);
    CHECK(r2.lower_bound_ok);
}
