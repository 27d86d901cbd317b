#include "favsites/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "favsites/walk.hpp" // in_I_h

namespace favsites::solver {

namespace {
constexpr size_t kMaxDim = 512;
}

Vec linear_solve(Mat A, Vec b) {
    size_t n = A.size();
    if (n == 0 || n > kMaxDim || b.size() != n)
        throw std::invalid_argument("linear_solve: bad dimensions");
    for (const auto& row : A)
        if (row.size() != n) throw std::invalid_argument("linear_solve: not square");
    Mat A0 = A;
    Vec b0 = b;

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        for (size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        if (A[p][c] == 0.0) throw std::runtime_error("linear_solve: singular matrix");
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (size_t r = c + 1; r < n; ++r) {
            double f = A[r][c] / A[c][c];
            if (f == 0.0) continue;
            A[r][c] = 0.0;
            for (size_t j = c + 1; j < n; ++j) A[r][j] -= f * A[c][j];
            b[r] -= f * b[c];
        }
    }
    Vec x(n);
    for (size_t i = n; i-- > 0;) {
        double s = b[i];
        for (size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }

    double bnorm = 1.0;
    for (double v : b0) bnorm = std::max(bnorm, std::abs(v));
    double rnorm = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double s = -b0[i];
        for (size_t j = 0; j < n; ++j) s += A0[i][j] * x[j];
        rnorm = std::max(rnorm, std::abs(s));
    }
    if (rnorm > 1e-9 * bnorm)
        throw std::runtime_error("linear_solve: residual check failed");
    return x;
}

RVec linear_solve(RMat A, RVec b) {
    size_t n = A.size();
    if (n == 0 || n > kMaxDim || b.size() != n)
        throw std::invalid_argument("linear_solve: bad dimensions");
    for (const auto& row : A)
        if (row.size() != n) throw std::invalid_argument("linear_solve: not square");
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && A[p][c] == 0) ++p;
        if (p == n) throw std::runtime_error("linear_solve: singular matrix");
        std::swap(A[c], A[p]);
        std::swap(b[c], b[p]);
        for (size_t r = c + 1; r < n; ++r) {
            if (A[r][c] == 0) continue;
            Rational f = A[r][c] / A[c][c];
            A[r][c] = 0;
            for (size_t j = c + 1; j < n; ++j) A[r][j] -= f * A[c][j];
            b[r] -= f * b[c];
        }
    }
    RVec x(n);
    for (size_t i = n; i-- > 0;) {
        Rational s = b[i];
        for (size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    return x;
}

namespace {

using kernels::KernelId;

// Exact certificate that every row keeps strictly less than full mass:
// the dropped escape mass makes the Neumann series converge, so the
// transient systems below are uniquely solvable.
void certify_substochastic(const RMat& M) {
    for (const auto& row : M) {
        Rational s = 0;
        for (const auto& v : row) {
            if (v < 0) throw std::logic_error("negative transition mass");
            s += v;
        }
        if (!(s < 1)) throw std::logic_error("transient row not substochastic");
    }
}

// (I - M) x = b
RVec solve_transient(const RMat& M, const RVec& b) {
    size_t n = M.size();
    RMat A(n, RVec(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            A[i][j] = (i == j ? Rational(1) : Rational(0)) - M[i][j];
    return linear_solve(A, b);
}

RVec solve_transient_transposed(const RMat& M, const RVec& b) {
    size_t n = M.size();
    RMat A(n, RVec(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            A[i][j] = (i == j ? Rational(1) : Rational(0)) - M[j][i];
    return linear_solve(A, b);
}

// Constrained pi block on states 1..h-1 (index i-1): moves i -> j kept
// only when j >= 1 and i + j < h.  The j = 0 exit is the success vector.
RMat constrained_pi_block(int64_t h) {
    size_t n = static_cast<size_t>(h - 1);
    RMat M(n, RVec(n, Rational(0)));
    for (int64_t i = 1; i < h; ++i)
        for (int64_t j = 1; i + j < h; ++j)
            M[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)] =
                kernels::prob_exact(KernelId::pi, i, j);
    certify_substochastic(M);
    return M;
}

// Constrained rho block on states 0..h-1: moves i -> j kept only when
// i + j + 1 < h (the vertex value riding on the edge pair stays below h).
RMat constrained_rho_block(int64_t h) {
    size_t n = static_cast<size_t>(h);
    RMat M(n, RVec(n, Rational(0)));
    for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; i + j + 1 < h; ++j)
            M[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                kernels::prob_exact(KernelId::rho, i, j);
    certify_substochastic(M);
    return M;
}

void check_h(int64_t h) {
    if (h < 1 || h > 64) throw std::invalid_argument("h out of range [1, 64]");
}

} // namespace

RVec hitting_probability_all(const AbsorptionSpec& spec) {
    check_h(spec.h);
    if (spec.kernel != KernelId::pi || !spec.lower_absorbing)
        throw std::invalid_argument("hitting_probability: needs pi with lower absorption");
    int64_t h = spec.h;
    size_t n = static_cast<size_t>(h - 1);
    RMat M(n, RVec(n, Rational(0)));
    RVec b(n, Rational(0));
    for (int64_t i = 1; i < h; ++i) {
        for (int64_t j = 1; j < h; ++j)
            M[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)] =
                kernels::prob_exact(KernelId::pi, i, j);
        b[static_cast<size_t>(i - 1)] = kernels::prob_exact(KernelId::pi, i, 0);
    }
    certify_substochastic(M);
    RVec q = n ? solve_transient(M, b) : RVec{};
    RVec out(static_cast<size_t>(h));
    out[0] = 1;
    for (int64_t i = 1; i < h; ++i) out[static_cast<size_t>(i)] = q[static_cast<size_t>(i - 1)];
    return out;
}

Rational hitting_probability(const AbsorptionSpec& spec, int64_t start) {
    check_h(spec.h);
    if (start < 0 || start >= spec.h)
        throw std::invalid_argument("hitting_probability: start out of range");
    return hitting_probability_all(spec)[static_cast<size_t>(start)];
}

Absorption expected_absorption(const AbsorptionSpec& spec, int64_t start) {
    check_h(spec.h);
    if (spec.pair_constraint)
        throw std::invalid_argument("expected_absorption: no pair constraint here");
    int64_t h = spec.h;

    // Transient states and their kernel rows.
    int64_t lo;
    if (spec.kernel == KernelId::rho && !spec.lower_absorbing) {
        lo = 0; // immigration keeps the chain alive at 0
    } else if (spec.kernel == KernelId::pi && spec.lower_absorbing) {
        lo = 1;
    } else {
        throw std::invalid_argument(
            "expected_absorption: rho without lower absorption or pi with it");
    }
    if (start < lo || start >= h)
        throw std::invalid_argument("expected_absorption: start out of range");

    size_t n = static_cast<size_t>(h - lo);
    RMat M(n, RVec(n, Rational(0)));
    for (int64_t i = lo; i < h; ++i)
        for (int64_t j = lo; j < h; ++j)
            M[static_cast<size_t>(i - lo)][static_cast<size_t>(j - lo)] =
                kernels::prob_exact(spec.kernel, i, j);
    certify_substochastic(M);

    RVec ones(n, Rational(1));
    RVec u = solve_transient(M, ones);
    RVec e(n, Rational(0));
    e[static_cast<size_t>(start - lo)] = 1;
    RVec g = solve_transient_transposed(M, e);

    Absorption out;
    out.e_tau = u[static_cast<size_t>(start - lo)];
    out.occupation.assign(n, Rational(0));
    Rational ez = 0;
    for (int64_t i = lo; i < h; ++i) {
        size_t ii = static_cast<size_t>(i - lo);
        out.occupation[ii] = g[ii];
        // Expected value carried out on the upward exit, summed exactly:
        // full mean minus the kept part below h.
        Rational over = kernels::moments_closed(spec.kernel, i).mean -
                        kernels::mean_partial_exact(spec.kernel, i, h - 1);
        ez += g[ii] * over;
    }
    out.e_z_tau = ez;
    return out;
}

RVec constrained_survival_all(int64_t h) {
    check_h(h);
    RVec out(static_cast<size_t>(h), Rational(0));
    out[0] = 1;
    if (h == 1) return out;
    RMat M = constrained_pi_block(h);
    size_t n = static_cast<size_t>(h - 1);
    RVec b(n);
    for (int64_t i = 1; i < h; ++i)
        b[static_cast<size_t>(i - 1)] = kernels::prob_exact(KernelId::pi, i, 0);
    RVec s = solve_transient(M, b);
    for (int64_t i = 1; i < h; ++i) out[static_cast<size_t>(i)] = s[static_cast<size_t>(i - 1)];
    return out;
}

Rational constrained_survival(const AbsorptionSpec& spec, int64_t start) {
    check_h(spec.h);
    if (spec.kernel != KernelId::pi || !spec.pair_constraint)
        throw std::invalid_argument("constrained_survival: needs pi with pair constraint");
    if (start < 0 || start >= spec.h)
        throw std::invalid_argument("constrained_survival: start must be < h");
    return constrained_survival_all(spec.h)[static_cast<size_t>(start)];
}

namespace {

// Survival of the negative-side chain started from the seam value s: one
// seam step (rho under origin immigration, pi verbatim) filtered by the
// pair constraint, then the constrained pi survival.
RVec seam_survival(int64_t h, Boundary variant, const RVec& sy) {
    KernelId seam = variant == Boundary::origin_immigration ? KernelId::rho
                                                            : KernelId::pi;
    RVec out(static_cast<size_t>(h), Rational(0));
    for (int64_t s = 0; s < h; ++s) {
        Rational acc = 0;
        for (int64_t j = 0; s + j < h; ++j)
            acc += kernels::prob_exact(seam, s, j) * sy[static_cast<size_t>(j)];
        out[static_cast<size_t>(s)] = acc;
    }
    return out;
}

Rational pattern_term(int64_t h, int64_t k) {
    using kernels::prob_exact;
    return prob_exact(KernelId::pi, k, h - k - 1) *
           prob_exact(KernelId::pi, h - k - 1, k + 1) *
           prob_exact(KernelId::pi, k + 1, h - k - 1);
}

} // namespace

Rational exact_A_probability(int64_t x, int64_t h, int64_t k, Boundary variant) {
    check_h(h);
    if (x < 1) throw std::invalid_argument("exact_A_probability: x must be >= 1");
    if (x > 100000) throw std::invalid_argument("exact_A_probability: x too large");
    if (k < 0 || !walk::in_I_h(h, k)) return Rational(0);
    if (h - k - 1 < 0) return Rational(0);
    Rational pat = pattern_term(h, k);
    if (pat == 0) return Rational(0);

    RVec sy = constrained_survival_all(h);
    RVec v = seam_survival(h, variant, sy);
    if (x > 1) {
        RMat Q = constrained_rho_block(h);
        size_t n = static_cast<size_t>(h);
        for (int64_t step = 1; step < x; ++step) {
            RVec nv(n, Rational(0));
            for (size_t i = 0; i < n; ++i) {
                Rational acc = 0;
                for (size_t j = 0; j < n; ++j)
                    if (Q[i][j] != 0) acc += Q[i][j] * v[j];
                nv[i] = acc;
            }
            v = std::move(nv);
        }
    }
    Rational p = pat * sy[static_cast<size_t>(h - k - 1)] * v[static_cast<size_t>(k)];
    if (p < 0 || p > 1) throw std::logic_error("exact_A_probability out of [0,1]");
    return p;
}

Rational exact_NH(int64_t H, Boundary variant, std::vector<NHTerm>* per_h) {
    if (H < 0 || H > 64) throw std::invalid_argument("exact_NH: H out of range");
    Rational total = 0;
    for (int64_t h = 1; h <= H; ++h) {
        Rational contrib = 0;
        std::vector<std::pair<int64_t, Rational>> pats;
        for (int64_t k = 0; k < h; ++k) {
            if (!walk::in_I_h(h, k)) continue;
            Rational pat = pattern_term(h, k);
            if (pat != 0) pats.emplace_back(k, pat);
        }
        if (!pats.empty()) {
            RVec sy = constrained_survival_all(h);
            RVec ys = seam_survival(h, variant, sy);
            // One fundamental-matrix solve serves every k at this h: the
            // solution w(k) aggregates the whole x >= 1 sum, since the
            // m-th Neumann term is exactly the x = m + 1 anchor.
            RMat Q = constrained_rho_block(h);
            RVec w = solve_transient(Q, ys);
            for (const auto& [k, pat] : pats)
                contrib += pat * sy[static_cast<size_t>(h - k - 1)] *
                           w[static_cast<size_t>(k)];
        }
        total += contrib;
        if (per_h) per_h->push_back(NHTerm{h, contrib});
    }
    if (total < 0) throw std::logic_error("exact_NH negative");
    return total;
}

} // namespace favsites::solver
