#include "favsites/kernels.hpp"

#include <mpfr.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace favsites::kernels {

const char* name(KernelId k) {
    switch (k) {
        case KernelId::pi: return "pi";
        case KernelId::rho: return "rho";
        case KernelId::rhostar: return "rhostar";
    }
    return "?";
}

KernelId parse_kernel(const std::string& s) {
    if (s == "pi") return KernelId::pi;
    if (s == "rho") return KernelId::rho;
    if (s == "rhostar") return KernelId::rhostar;
    throw std::invalid_argument("unknown kernel: " + s);
}

// ---------------------------------------------------------------------------
// Exact path
// ---------------------------------------------------------------------------

static Rational pi_exact(int64_t i, int64_t j) {
    if (i < 0) throw std::invalid_argument("kernel state must be nonnegative");
    if (j < 0) return Rational(0);
    if (i == 0) return Rational(j == 0 ? 1 : 0);
    return dyadic(binomial(uint64_t(i + j - 1), uint64_t(j)), uint64_t(i + j));
}

Rational prob_exact(KernelId k, int64_t i, int64_t j) {
    switch (k) {
        case KernelId::pi: return pi_exact(i, j);
        case KernelId::rho: return pi_exact(i + 1, j);
        case KernelId::rhostar: return pi_exact(i, j - 1);
    }
    return Rational(0);
}

// ---------------------------------------------------------------------------
// Floating path. Double-double log-gamma values keep the absolute error of
// the exponent near 1e-28, so exp() dominates at ~1e-13 relative worst case.
// ---------------------------------------------------------------------------

namespace {

struct DD {
    double hi, lo;
};

DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return two_sum(s.hi, s.lo);
}

DD dd_neg(DD a) { return {-a.hi, -a.lo}; }

DD dd_mul_d(DD a, double b) {
    double p = a.hi * b;
    double err = std::fma(a.hi, b, -p);
    err += a.lo * b;
    return two_sum(p, err);
}

constexpr DD kLn2{0x1.62e42fefa39efp-1, 0x1.abc9e3b39803fp-56};

std::mutex lg_mutex;
std::vector<DD> lg_cache; // lg_cache[n] = lnGamma(n), index 0 unused

DD lngamma_dd(uint64_t n) {
    std::lock_guard<std::mutex> lock(lg_mutex);
    if (n < lg_cache.size()) return lg_cache[n];
    if (lg_cache.empty()) lg_cache.assign(2, DD{0, 0}); // lnGamma(1) = 0
    mpfr_t t;
    mpfr_init2(t, 192);
    lg_cache.reserve(n + 1);
    for (uint64_t m = lg_cache.size(); m <= n; ++m) {
        mpfr_set_ui(t, m, MPFR_RNDN);
        mpfr_lngamma(t, t, MPFR_RNDN);
        double hi = mpfr_get_d(t, MPFR_RNDN);
        mpfr_sub_d(t, t, hi, MPFR_RNDN);
        lg_cache.push_back(DD{hi, mpfr_get_d(t, MPFR_RNDN)});
    }
    mpfr_clear(t);
    return lg_cache[n];
}

double pi_float(int64_t i, int64_t j) {
    if (j < 0) return 0.0;
    if (i == 0) return j == 0 ? 1.0 : 0.0;
    if (i + j <= 64) return pi_exact(i, j).get_d();
    // log pi = lnGamma(i+j) - lnGamma(i) - lnGamma(j+1) - (i+j) ln 2
    DD acc = lngamma_dd(uint64_t(i + j));
    acc = dd_add(acc, dd_neg(lngamma_dd(uint64_t(i))));
    acc = dd_add(acc, dd_neg(lngamma_dd(uint64_t(j + 1))));
    acc = dd_add(acc, dd_neg(dd_mul_d(kLn2, double(i + j))));
    return std::exp(acc.hi + acc.lo);
}

} // namespace

double prob(KernelId k, int64_t i, int64_t j) {
    if (i < 0) throw std::invalid_argument("kernel state must be nonnegative");
    switch (k) {
        case KernelId::pi: return pi_float(i, j);
        case KernelId::rho: return pi_float(i + 1, j);
        case KernelId::rhostar: return pi_float(i, j - 1);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

uint64_t sample(KernelId k, uint64_t i, rng::Xoshiro256pp& g) {
    switch (k) {
        case KernelId::pi: return rng::sum_of_geometrics(g, i);
        case KernelId::rho: return rng::sum_of_geometrics(g, i + 1);
        case KernelId::rhostar: return 1 + rng::sum_of_geometrics(g, i);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

Moments moments_closed(KernelId k, uint64_t i) {
    double d = double(i);
    switch (k) {
        case KernelId::pi: return {d, d * d + 2 * d};
        case KernelId::rho: return {d + 1, d * d + 4 * d + 3};
        case KernelId::rhostar: return {d + 1, d * d + 4 * d + 1};
    }
    return {0, 0};
}

// For j >= max(2i+8, 50), term ratios of j^p * prob (p <= 2) are below 0.79,
// so the dropped tail is at most 4x the last kept term.
uint64_t certified_cutoff(KernelId k, uint64_t i, double tol, int power) {
    uint64_t j = std::max<uint64_t>(2 * i + 8, 50);
    for (;; ++j) {
        double term = prob(k, int64_t(i), int64_t(j));
        for (int p = 0; p < power; ++p) term *= double(j);
        if (4.0 * term <= tol) return j;
        if (j > 100000000) throw std::runtime_error("certified_cutoff: no convergence");
    }
}

Moments moments_summed(KernelId k, uint64_t i, double tol) {
    uint64_t J = certified_cutoff(k, i, tol, 2);
    double m1 = 0, m2 = 0;
    for (uint64_t j = 0; j <= J; ++j) {
        double p = prob(k, int64_t(i), int64_t(j));
        m1 += double(j) * p;
        m2 += double(j) * double(j) * p;
    }
    return {m1, m2};
}

double row_sum(KernelId k, uint64_t i, double tol) {
    uint64_t J = certified_cutoff(k, i, tol, 0);
    double s = 0;
    for (uint64_t j = 0; j <= J; ++j) s += prob(k, int64_t(i), int64_t(j));
    return s;
}

Rational cdf_exact(KernelId k, uint64_t i, uint64_t J) {
    Rational s(0);
    for (uint64_t j = 0; j <= J; ++j) s += prob_exact(k, int64_t(i), int64_t(j));
    return s;
}

Rational mean_partial_exact(KernelId k, uint64_t i, uint64_t J) {
    Rational s(0);
    for (uint64_t j = 1; j <= J; ++j) s += Rational(j) * prob_exact(k, int64_t(i), int64_t(j));
    return s;
}

Rational second_partial_exact(KernelId k, uint64_t i, uint64_t J) {
    Rational s(0);
    for (uint64_t j = 1; j <= J; ++j)
        s += Rational(j) * Rational(j) * prob_exact(k, int64_t(i), int64_t(j));
    return s;
}

// ---------------------------------------------------------------------------
// Asymptotic window
// ---------------------------------------------------------------------------

WindowCheck asymptotic_window_check(uint64_t h, uint64_t mono_samples) {
    if (h < 16) throw std::invalid_argument("asymptotic_window_check: h must be >= 16");
    WindowCheck out;
    out.h = h;
    double sq = std::sqrt(double(h));
    int64_t lo = int64_t(std::floor(0.5 * (double(h) - 10 * sq))) + 1;
    int64_t hi = int64_t(std::ceil(0.5 * (double(h) + 10 * sq))) - 1;
    lo = std::max<int64_t>(lo, 1);

    double mn = 0, mx = 0, bmax = 0;
    bool first = true;
    uint64_t count = 0;
    for (int64_t i = lo; i <= hi; ++i) {
        for (int64_t j = lo; j <= hi; ++j) {
            double v = prob(KernelId::pi, i, j) * sq;
            ++count;
            if (first) {
                mn = mx = v;
                first = false;
            } else {
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            if (i + j == int64_t(h)) bmax = std::max(bmax, v);
        }
    }
    out.min_scaled = mn;
    out.max_scaled = mx;
    out.boundary_max_scaled = bmax;
    out.pairs_checked = count;

    // Exact decreasing-in-i checks: pi(i+1,j)/pi(i,j) = (i+j)/(2i) < 1 iff j < i.
    bool mono = true;
    rng::Xoshiro256pp g = rng::Xoshiro256pp::seeded(h * 1000003 + 17);
    for (uint64_t s = 0; s < mono_samples; ++s) {
        int64_t j = lo + int64_t(g.next() % uint64_t(hi - lo + 1));
        int64_t i1 = j + 1 + int64_t(g.next() % uint64_t(h));
        int64_t i2 = i1 + 1 + int64_t(g.next() % uint64_t(h));
        if (!(prob_exact(KernelId::pi, i1, j) > prob_exact(KernelId::pi, i2, j))) mono = false;
    }
    out.monotone_ok = mono;
    return out;
}

} // namespace favsites::kernels
