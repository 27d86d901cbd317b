// Acceptance battery.  Nine criteria, one verdict line each, exit 0 only
// when every criterion passes.  Exact claims use rational arithmetic and
// admit no tolerance; Monte Carlo claims run from the fixed master seed
// with a fixed worker count, so reruns are bit-for-bit reproducible.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "favsites/chains.hpp"
#include "favsites/cli.hpp"
#include "favsites/enumerate.hpp"
#include "favsites/kernels.hpp"
#include "favsites/profiles.hpp"
#include "favsites/solver.hpp"
#include "favsites/stats.hpp"
#include "favsites/walk.hpp"

#include "pilot_fixtures.hpp"

using namespace favsites;
using kernels::KernelId;

namespace {

double now_s() {
    using Clock = std::chrono::steady_clock;
    static const Clock::time_point t0 = Clock::now();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void detail(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::printf("         ");
    std::vprintf(fmt, ap);
    std::printf("\n");
    va_end(ap);
    std::fflush(stdout);
}

bool expect(bool ok, const char* what) {
    if (!ok) detail("FAILED check: %s", what);
    return ok;
}

// ---- 1. local-time identity ---------------------------------------------

bool criterion_identity() {
    auto rep = enumerate::verify_identity_exhaustive(14);
    detail("paths=%" PRIu64 " violations=%" PRIu64, rep.leaves, rep.violations);
    return expect(rep.leaves == (1ull << 14), "all 2^14 paths visited") &&
           expect(rep.violations == 0, "zero identity violations");
}

// ---- 2. kernel suite ------------------------------------------------------

bool criterion_kernels() {
    bool ok = true;

    ok &= expect(kernels::prob_exact(KernelId::pi, 1, 1) == Rational(1, 4),
                 "pi(1,1) == 1/4");
    ok &= expect(kernels::prob_exact(KernelId::pi, 2, 2) == Rational(3, 16),
                 "pi(2,2) == 3/16");
    ok &= expect(kernels::prob_exact(KernelId::pi, 0, 0) == Rational(1),
                 "pi(0,0) == 1");

    // Certified-truncation row sums for every row i <= 200, all kernels.
    double worst = 1.0;
    for (KernelId kid : {KernelId::pi, KernelId::rho, KernelId::rhostar})
        for (uint64_t i = 0; i <= 200; ++i)
            worst = std::min(worst, kernels::row_sum(kid, i));
    detail("worst row sum over i<=200, all kernels: 1-%.3g", 1.0 - worst);
    ok &= expect(worst >= 1.0 - 1e-12, "row sums >= 1 - 1e-12");

    // Exact rational martingale sums via the term shift identities
    //   j pi(i,j)   = i (i>=1) pi(i+1, j-1)
    //   j rho(i,j)  = (i+1) rho(i+1, j-1)
    //   j^2 rho(i,j) = (i+1)(i+2) pi(i+3, j-2) + (i+1) pi(i+2, j-1)
    // so each partial sum collapses to a shifted cdf, exactly, for every
    // truncation J; with the certified row sums this pins the full sums
    // at i for pi, i+1 for rho, and i^2+4i+3 for the rho second moment.
    const uint64_t J = 100;
    for (int64_t i = 0; i <= 40 && ok; ++i) {
        uint64_t ui = static_cast<uint64_t>(i);
        Rational mp = kernels::mean_partial_exact(KernelId::pi, ui, J);
        ok &= expect(mp == Rational(i) *
                               kernels::cdf_exact(KernelId::pi, ui + 1, J - 1),
                     "pi mean shift identity");
        Rational mr = kernels::mean_partial_exact(KernelId::rho, ui, J);
        ok &= expect(mr == Rational(i + 1) *
                               kernels::cdf_exact(KernelId::rho, ui + 1, J - 1),
                     "rho mean shift identity");
        Rational sr = kernels::second_partial_exact(KernelId::rho, ui, J);
        Rational want =
            Rational((i + 1) * (i + 2)) *
                kernels::cdf_exact(KernelId::pi, ui + 3, J - 2) +
            Rational(i + 1) * kernels::cdf_exact(KernelId::pi, ui + 2, J - 1);
        ok &= expect(sr == want, "rho second-moment shift identity");
        ok &= expect((i + 1) * (i + 2) + (i + 1) == i * i + 4 * i + 3,
                     "closed form i^2+4i+3");
        auto cm = kernels::moments_closed(KernelId::rho, ui);
        ok &= expect(cm.mean == double(i + 1) &&
                         cm.second == double(i * i + 4 * i + 3),
                     "closed moments match");
    }
    detail("shift identities exact (rational) for i <= 40 at J = %" PRIu64, J);

    // Exact monotonicity spot checks ride along with the window scans.
    uint64_t pairs = 0;
    for (uint64_t h : {64u, 100u, 400u}) {
        auto w = kernels::asymptotic_window_check(h, 48);
        ok &= expect(w.monotone_ok, "pi(i1,j) > pi(i2,j) on sampled triples");
        pairs += w.pairs_checked;
    }
    detail("monotone triples checked: %" PRIu64 " across h in {64,100,400}",
           pairs);
    return ok;
}

// ---- 3. profile construction adjudication ---------------------------------

bool criterion_adjudication() {
    bool ok = true;

    // Exact identification at (x,k) = (1,0), window {-1}.  The empty
    // profile carries probability 1/2 under the origin-immigration
    // variant, which equals the Geometric(1/2) mass at zero, and the
    // seam kernel row is the full geometric law, so the window marginal
    // P(1) = 1/4 as well.
    profiles::CrossingProfile empty;
    empty.x = 1;
    ok &= expect(profiles::profile_probability(
                     empty, Boundary::origin_immigration) == Rational(1, 2),
                 "P(empty profile) == 1/2");
    for (int m = 0; m <= 40; ++m)
        ok &= expect(kernels::prob_exact(KernelId::pi, 1, m) ==
                         dyadic(BigInt(1), m + 1),
                     "seam row == Geometric(1/2)");

    // The exact stopped-walk law agrees: mass 1/2 at zero, and the
    // truncated mass at one brackets 1/4.
    auto law = enumerate::stopped_profile_law(1, 0, {-1, -1}, 9);
    Rational p1 = law.prob({1});
    ok &= expect(law.prob({0}) == Rational(1, 2), "walk law P(0) == 1/2");
    ok &= expect(p1 <= Rational(1, 4) && Rational(1, 4) <= p1 + law.residual_prob(),
                 "walk law brackets P(1) == 1/4");

    // Verbatim variant: every profile with mass left of the origin is
    // impossible, so its window law is a point mass at zero and the
    // total-variation gap to Geometric(1/2) is exactly 1 - 1/2.
    profiles::CrossingProfile neg;
    neg.x = 1;
    neg.set(-1, 1);
    ok &= expect(profiles::profile_probability(neg, Boundary::verbatim) ==
                     Rational(0),
                 "verbatim kills negative support");
    ok &= expect(profiles::profile_probability(
                     neg, Boundary::origin_immigration) == Rational(1, 8),
                 "origin-immigration realizes it");
    Rational tv_exact = Rational(1) - kernels::prob_exact(KernelId::pi, 1, 0);
    ok &= expect(tv_exact == Rational(1, 2) && tv_exact >= Rational(1, 2),
                 "verbatim TV == 1/2 >= 1/2");
    auto bad = chains::rk_coupling_test(1, 0, {-2, 4}, 20000, 14,
                                        Boundary::verbatim, accept::kSeed);
    detail("verbatim sampler: tv=%.4f chi2 p=%.3g (rejected as it must be)",
           bad.tv_crossing, bad.crossing_form.p_value);
    ok &= expect(bad.tv_crossing >= 0.40, "verbatim sampler far from walk law");

    // Coupling grid for the adjudicated variant: nine cells, both field
    // forms, 1e5 samples each against the exact stopped-walk law.
    for (int64_t x = 1; x <= 3; ++x)
        for (int64_t k = 0; k <= 2; ++k) {
            auto rep = chains::rk_coupling_test(
                x, k, {-2, x + 3}, 100000, 20, Boundary::origin_immigration,
                accept::kSeed + static_cast<uint64_t>(9 * x + k));
            detail("cell (%" PRId64 ",%" PRId64 "): p_cross=%.4g p_vertex=%.4g "
                   "tv=%.4f/%.4f",
                   x, k, rep.crossing_form.p_value, rep.vertex_form.p_value,
                   rep.tv_crossing, rep.tv_vertex);
            ok &= expect(!rep.inconclusive, "coupling cell conclusive");
            ok &= expect(rep.crossing_form.p_value > 1e-3,
                         "crossing form p > 1e-3");
            ok &= expect(rep.vertex_form.p_value > 1e-3,
                         "vertex form p > 1e-3");
        }
    return ok;
}

// ---- 4. optional stopping -------------------------------------------------

bool criterion_stopping() {
    bool ok = true;

    // Extinction-before-h bound, exact, every start, every h <= 64.
    for (int64_t h = 2; h <= 64; ++h) {
        solver::AbsorptionSpec spec;
        spec.kernel = KernelId::pi;
        spec.h = h;
        spec.lower_absorbing = true;
        auto v = solver::hitting_probability_all(spec);
        for (int64_t s = 1; s < h; ++s)
            if (v[static_cast<size_t>(s)] < Rational(h - s, h)) {
                detail("bound fails at h=%" PRId64 " start=%" PRId64, h, s);
                ok = false;
            }
    }
    detail("hitting_probability >= (h-start)/h for all 1 <= start < h <= 64");

    solver::AbsorptionSpec rho2;
    rho2.kernel = KernelId::rho;
    rho2.h = 2;
    auto ab = solver::expected_absorption(rho2, 0);
    ok &= expect(ab.e_tau == Rational(16, 5), "E tau_2 == 16/5 exact");

    for (int64_t h : {int64_t{2}, int64_t{100}}) {
        auto r = chains::etau_check(h, 0, 100000, accept::kSeed, 4);
        detail("h=%" PRId64 ": tau %.4f +- %.4f, gain %.4f +- %.4f, overlap=%d",
               h, r.tau.mean, r.tau.se, r.z_gain.mean, r.z_gain.se,
               int(r.ci_overlap));
        ok &= expect(r.ci_overlap, "tau and Z-gain CIs overlap");
    }
    return ok;
}

// ---- 5. overshoot ----------------------------------------------------------

bool criterion_overshoot() {
    bool ok = true;
    struct Cell {
        int64_t h, k, u;
    };
    for (Cell c : {Cell{50, 30, 60}, Cell{100, 80, 115}}) {
        auto y = chains::overshoot_experiment_y(c.h, c.u, c.k, 50000,
                                                accept::kSeed, 10000);
        detail("y (h=%" PRId64 ",k=%" PRId64 ",u=%" PRId64
               "): lhs=%.4f rhs=%.4f se=%.4g survivors=%" PRIu64,
               c.h, c.k, c.u, y.lhs, y.rhs.get_d(), y.se, y.survivors);
        ok &= expect(!y.inconclusive && y.survivors >= 10000,
                     ">= 1e4 conditioned survivors");
        ok &= expect(y.lhs <= y.rhs.get_d() + 3 * y.se, "y: lhs <= rhs + 3 se");

        auto z = chains::overshoot_experiment_z(c.h, c.u, c.k, 50000,
                                                accept::kSeed + 1);
        detail("z (h=%" PRId64 ",k=%" PRId64 ",u=%" PRId64
               "): lhs=%.4f rhs=%.4f se=%.4g",
               c.h, c.k, c.u, z.lhs, z.rhs.get_d(), z.se);
        ok &= expect(z.lhs <= z.rhs.get_d() + 3 * z.se, "z: lhs <= rhs + 3 se");
    }
    return ok;
}

// ---- 6. sqrt(h) occupation deficit -----------------------------------------

bool criterion_efrac() {
    bool ok = true;
    struct Cell {
        int64_t h, k;
    };
    double lo = 1e300, hi = 0;
    for (Cell c : {Cell{100, 85}, Cell{400, 370}, Cell{1600, 1540}}) {
        auto r = chains::efrac_estimate(c.h, c.k, 100000, accept::kSeed, 4);
        detail("h=%" PRId64 ": ratio=%.4f (mean %.3f +- %.3f)", c.h,
               r.ratio_to_sqrt_h, r.sum_frac.mean, r.sum_frac.se);
        lo = std::min(lo, r.ratio_to_sqrt_h);
        hi = std::max(hi, r.ratio_to_sqrt_h);
        ok &= expect(r.ratio_to_sqrt_h > accept::kEfracRatioMin,
                     "ratio above pilot floor");
    }
    detail("spread hi/lo = %.4f", hi / lo);
    ok &= expect(hi / lo < accept::kEfracSpreadMax, "spread below factor 2");
    return ok;
}

// ---- 7. log growth of the expected count -----------------------------------

bool criterion_log_growth() {
    bool ok = true;
    std::vector<std::pair<double, double>> pts;
    Rational prev(-1);
    for (int64_t H : {20, 30, 40, 50, 64}) {
        Rational nh = solver::exact_NH(H);
        detail("E N_%" PRId64 " = %.8g", H, nh.get_d());
        ok &= expect(nh > prev, "exact_NH strictly increasing");
        prev = nh;
        pts.emplace_back(double(H), nh.get_d());
    }
    auto fit = stats::log_fit(pts);
    detail("log fit slope = %.4g", fit.slope);
    ok &= expect(fit.slope > 0, "log_fit slope > 0");

    std::vector<std::array<int64_t, 3>> cells = {
        {1, 7, 5}, {2, 7, 5}, {3, 7, 5}, {1, 14, 9}};
    auto est = profiles::a_event_frequencies(cells, accept::kCellTCap,
                                             accept::kCellReps, accept::kSeed, 4);
    for (const auto& c : est) {
        double p = solver::exact_A_probability(c.x, c.h, c.k).get_d();
        double se = std::sqrt(p * (1.0 - p) / double(c.reps));
        double dev = std::fabs(c.phat - p) / se;
        detail("cell (%" PRId64 ",%" PRId64 ",%" PRId64 "): hits=%" PRIu64
               " phat=%.3g exact=%.3g dev=%.2f se",
               c.x, c.h, c.k, c.hits, c.phat, p, dev);
        ok &= expect(dev <= 3.0, "direct walk within 3 se of exact");
    }
    return ok;
}

// ---- 8. second-moment machinery --------------------------------------------

bool criterion_second_moment() {
    bool ok = true;

    // Exact product formula vs the path-enumeration oracle, both
    // directions, every profile with support in [-2,4] and entries <= 2,
    // anchors 1..4.
    uint64_t realizable = 0, checked = 0;
    for (int64_t x = 1; x <= 4; ++x) {
        for (int64_t code = 0; code < 2187; ++code) {
            int64_t c = code;
            profiles::CrossingProfile p;
            p.x = x;
            for (int64_t s = 0; s < 7; ++s) {
                int64_t v = c % 3;
                c /= 3;
                if (v) p.set(-2 + s, v);
            }
            Rational exact = profiles::profile_probability(p);
            Rational oracle = enumerate::profile_event_prob(x, p.support);
            ++checked;
            if (exact > Rational(0)) ++realizable;
            if (exact != oracle) {
                detail("oracle mismatch at x=%" PRId64 " code=%" PRId64, x,
                       code);
                ok = false;
            }
        }
    }
    detail("oracle grid: %" PRIu64 " profiles checked, %" PRIu64
           " realizable, anchors 1..4",
           checked, realizable);
    ok &= expect(realizable > 1000, "grid covers a nontrivial family");

    // Exhaustive disjointness of the push-down families at horizon 18.
    std::vector<profiles::CrossingProfile> events;
    for (int64_t x : {1, 2}) {
        profiles::EventFamily fam{x, 4, 1};
        auto ell = profiles::minimal_member(fam);
        for (const auto& q : profiles::perturbations(ell)) events.push_back(q);
        auto lifted = ell;
        lifted.set(x + 3, 1);
        for (const auto& q : profiles::perturbations(lifted))
            events.push_back(q);
    }
    auto drep = profiles::disjointness_check(events, 18);
    detail("disjointness: %" PRIu64 " events, %" PRIu64 " leaves, single=%" PRIu64
           " multi=%" PRIu64,
           drep.events, drep.leaves, drep.single, drep.multi);
    ok &= expect(drep.events == 8 && drep.leaves == (1ull << 18), "battery shape");
    ok &= expect(drep.pass && drep.multi == 0, "no co-occurrence on any path");

    // Push-down mass ratios, exact, against the pilot floor.
    struct Fam {
        int64_t h, k;
    };
    for (Fam f : {Fam{25, 17}, Fam{49, 30}, Fam{100, 58}}) {
        profiles::EventFamily fam{1, f.h, f.k};
        auto ell = profiles::minimal_member(fam);
        double r = profiles::fluc_ratio(ell, fam).get_d();
        detail("fluc h=%" PRId64 " k=%" PRId64 ": ratio=%.6g", f.h, f.k, r);
        ok &= expect(r >= accept::kFlucRatioMin, "ratio >= pilot floor");
    }

    // Second-moment ratio inside its pilot bracket.
    auto m30 = profiles::second_moment_diagnostic(30, 10000, 1000000,
                                                  accept::kSeed, 4);
    detail("H=30: ratio=%.6f hits=%" PRIu64 " near/far share=%.3f/%.3f",
           m30.ratio, m30.total_hits, m30.near_share, m30.far_share);
    ok &= expect(!m30.inconclusive && m30.ratio >= accept::kM2Lo30 &&
                     m30.ratio <= accept::kM2Hi30,
                 "H=30 ratio within pilot bracket");
    auto m50 = profiles::second_moment_diagnostic(50, 10000, 1000000,
                                                  accept::kSeed, 4);
    detail("H=50: ratio=%.6f hits=%" PRIu64 " near/far share=%.3f/%.3f",
           m50.ratio, m50.total_hits, m50.near_share, m50.far_share);
    ok &= expect(!m50.inconclusive && m50.ratio >= accept::kM2Lo50 &&
                     m50.ratio <= accept::kM2Hi50,
                 "H=50 ratio within pilot bracket");
    return ok;
}

// ---- 9. reproducibility -----------------------------------------------------

std::string fresh_dir(const std::string& tag) {
    std::string tmpl = "/tmp/favsites-accept-" + tag + "-XXXXXX";
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    return std::string(buf.data());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool criterion_reproducibility() {
    bool ok = true;

    struct Cmd {
        const char* tag;
        std::vector<std::string> args;
    };
    const std::string seed = std::to_string(accept::kSeed);
    std::vector<Cmd> cmds = {
        {"verify-identity", {"verify-identity", "--n", "12"}},
        {"kernel", {"kernel", "--kernel", "rho", "--imax", "10", "--jmax", "24"}},
        {"rk-check",
         {"rk-check", "--x", "1", "--k", "1", "--samples", "20000", "--n-cap",
          "14", "--seed", seed}},
        {"chain-lab",
         {"chain-lab", "--kernel", "rho", "--start", "0", "--h", "12", "--u",
          "15", "--reps", "2000", "--seed", seed}},
        {"exact", {"exact", "--NH", "8", "--A", "1,7,5"}},
        {"simulate",
         {"simulate", "--steps", "30000", "--H", "32", "--seed", seed}},
        {"moments",
         {"moments", "--H", "10,14", "--t-max", "1500", "--reps", "1500",
          "--seed", seed}},
        {"report", {"report", "--seed", seed}},
    };

    for (auto& c : cmds) {
        std::string dir = fresh_dir(c.tag);
        auto args = c.args;
        args.push_back("--out");
        args.push_back(dir);
        int rc = cli::run(args);
        bool ran = expect(rc == 0, "subcommand exits 0");
        std::string manifest = dir + "/" + c.tag + "-manifest.json";
        int rrc = ran ? cli::run({"replay", manifest, "--out", dir}) : -1;
        detail("%-16s run rc=%d replay rc=%d", c.tag, rc, rrc);
        ok &= ran && expect(rrc == 0, "replay reproduces checksums");
    }

    // Worker-count independence: identical bytes at 1 and 4 workers.
    {
        std::string d1 = fresh_dir("w1");
        std::string d4 = fresh_dir("w4");
        std::vector<std::string> base = {"moments", "--H",     "10,14",
                                         "--t-max", "1500",    "--reps",
                                         "1500",    "--seed",  seed};
        auto a1 = base;
        a1.insert(a1.end(), {"--workers", "1", "--out", d1});
        auto a4 = base;
        a4.insert(a4.end(), {"--workers", "4", "--out", d4});
        ok &= expect(cli::run(a1) == 0 && cli::run(a4) == 0, "moments runs");
        std::string b1 = slurp(d1 + "/moments.csv");
        std::string b4 = slurp(d4 + "/moments.csv");
        detail("moments.csv bytes: %zu (w1) vs %zu (w4), equal=%d", b1.size(),
               b4.size(), int(!b1.empty() && b1 == b4));
        ok &= expect(!b1.empty() && b1 == b4, "worker-count independence");
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* label;
        bool (*fn)();
    };
    const Criterion table[] = {
        {"local-time identity, both forms, all 2^14 paths", criterion_identity},
        {"kernel table: spots, row sums, exact moment identities",
         criterion_kernels},
        {"profile-law adjudication and coupling grid", criterion_adjudication},
        {"optional stopping: exact bounds and stopped-chain CIs",
         criterion_stopping},
        {"overshoot bounds at first passage", criterion_overshoot},
        {"occupation deficit scales like sqrt(h)", criterion_efrac},
        {"expected event count grows like log H", criterion_log_growth},
        {"second-moment machinery: oracle, disjointness, ratios",
         criterion_second_moment},
        {"CLI reproducibility: manifests, replay, workers",
         criterion_reproducibility},
    };

    // Optional numeric arguments restrict the run to those criteria.
    std::vector<bool> want(10, argc <= 1);
    for (int a = 1; a < argc; ++a) {
        int v = std::atoi(argv[a]);
        if (v >= 1 && v <= 9) want[static_cast<size_t>(v)] = true;
    }

    int failures = 0;
    int idx = 0;
    for (const auto& c : table) {
        ++idx;
        if (!want[static_cast<size_t>(idx)]) continue;
        double t0 = now_s();
        bool pass = false;
        try {
            pass = c.fn();
        } catch (const std::exception& e) {
            detail("exception: %s", e.what());
        }
        std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL",
                    idx, c.label, now_s() - t0);
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    int ran = 0;
    for (int i = 1; i <= 9; ++i) ran += want[static_cast<size_t>(i)] ? 1 : 0;
    std::printf("%d/%d criteria passed (%.1fs total)\n", ran - failures, ran,
                now_s());
    return failures == 0 ? 0 : 1;
}
