#include "favsites/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace favsites::stats {

double Pmf::total() const {
    double s = residual;
    for (const auto& [k, v] : p) s += v;
    return s;
}

uint64_t Counts::total() const {
    uint64_t s = residual;
    for (const auto& [k, v] : n) s += v;
    return s;
}

double tv_distance(const Pmf& a, const Pmf& b) {
    if (std::abs(a.total() - 1.0) > 1e-6 || std::abs(b.total() - 1.0) > 1e-6)
        throw std::invalid_argument("tv_distance: inputs must be normalized");
    double s = std::abs(a.residual - b.residual);
    auto ia = a.p.begin();
    auto ib = b.p.begin();
    while (ia != a.p.end() || ib != b.p.end()) {
        if (ib == b.p.end() || (ia != a.p.end() && ia->first < ib->first)) {
            s += std::abs(ia->second);
            ++ia;
        } else if (ia == a.p.end() || ib->first < ia->first) {
            s += std::abs(ib->second);
            ++ib;
        } else {
            s += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * s;
}

const char* name(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
    }
}

double chi_square_survival(double stat, int dof) {
    if (dof < 1) return 1.0;
    if (stat <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

ChiSquareReport chi_square(const Counts& obs, const Pmf& expected,
                           double alpha, double floor_count) {
    ChiSquareReport rep;
    rep.n = obs.total();
    if (rep.n == 0) {
        rep.note = "no observations";
        return rep;
    }
    double N = static_cast<double>(rep.n);

    // Assemble (expected probability, observed count) per category.
    std::vector<std::pair<double, double>> cells;
    double exp_seen = 0;
    for (const auto& [key, pk] : expected.p) {
        auto it = obs.n.find(key);
        double o = it == obs.n.end() ? 0.0 : static_cast<double>(it->second);
        if (pk <= 0.0 && o > 0.0) {
            rep.verdict = Verdict::fail;
            rep.p_value = 0.0;
            rep.note = "observed mass on zero-probability bucket";
            return rep;
        }
        cells.emplace_back(pk, o);
        exp_seen += pk;
    }
    for (const auto& [key, o] : obs.n) {
        if (expected.p.count(key)) continue;
        if (o > 0) {
            rep.verdict = Verdict::fail;
            rep.p_value = 0.0;
            rep.note = "observed bucket outside expected support";
            return rep;
        }
    }
    cells.emplace_back(expected.residual, static_cast<double>(obs.residual));
    exp_seen += expected.residual;
    if (std::abs(exp_seen - 1.0) > 1e-6)
        throw std::invalid_argument("chi_square: expected pmf not normalized");
    if (expected.residual <= 0.0 && obs.residual > 0) {
        rep.verdict = Verdict::fail;
        rep.p_value = 0.0;
        rep.note = "observed residual but expected residual is zero";
        return rep;
    }

    // TV between the empirical frequencies and the expected pmf.
    {
        double s = 0;
        for (const auto& [pk, o] : cells) s += std::abs(o / N - pk);
        rep.tv = 0.5 * s;
    }

    // Pool small-expectation cells, ascending, until each pooled cell has
    // expected count >= floor_count.  The running tail pool merges into the
    // last emitted cell if it ends short.  The grouping must not look at
    // the data: ties in expected probability keep their key order, else
    // equal-probability cells get ranked by observed count and the merged
    // groups inherit a fabricated deviation.
    std::stable_sort(cells.begin(), cells.end(),
                     [](const std::pair<double, double>& a,
                        const std::pair<double, double>& b) {
                         return a.first < b.first;
                     });
    std::vector<std::pair<double, double>> pooled;
    double pe = 0, po = 0;
    for (const auto& [pk, o] : cells) {
        pe += pk * N;
        po += o;
        if (pe >= floor_count) {
            pooled.emplace_back(pe, po);
            pe = po = 0;
        }
    }
    if (pe > 0 || po > 0) {
        if (!pooled.empty()) {
            pooled.back().first += pe;
            pooled.back().second += po;
        } else {
            pooled.emplace_back(pe, po);
        }
    }

    rep.cells = static_cast<int>(pooled.size());
    rep.dof = rep.cells - 1;
    rep.min_expected = pooled.empty() ? 0 : pooled.front().first;
    for (const auto& [e, o] : pooled) rep.min_expected = std::min(rep.min_expected, e);
    if (rep.dof < 1) {
        rep.verdict = Verdict::inconclusive;
        rep.note = "fewer than two cells after pooling";
        return rep;
    }
    double stat = 0;
    for (const auto& [e, o] : pooled) stat += (o - e) * (o - e) / e;
    rep.stat = stat;
    rep.p_value = chi_square_survival(stat, rep.dof);
    rep.verdict = rep.p_value > alpha ? Verdict::pass : Verdict::fail;
    return rep;
}

MeanCI mean_ci(const std::vector<double>& xs) {
    double s = 0, ss = 0;
    for (double x : xs) {
        s += x;
        ss += x * x;
    }
    return mean_ci_moments(s, ss, xs.size());
}

MeanCI mean_ci_moments(double sum, double sumsq, uint64_t n) {
    MeanCI r;
    r.n = n;
    if (n == 0) return r;
    double dn = static_cast<double>(n);
    r.mean = sum / dn;
    if (n > 1) {
        double var = (sumsq - sum * sum / dn) / (dn - 1.0);
        if (var < 0) var = 0;
        r.se = std::sqrt(var / dn);
    }
    r.lo = r.mean - 3 * r.se;
    r.hi = r.mean + 3 * r.se;
    return r;
}

bool ci_overlap(const MeanCI& a, const MeanCI& b) {
    return a.lo <= b.hi && b.lo <= a.hi;
}

LogFit log_fit(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) throw std::invalid_argument("log_fit: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [u, v] : pts) {
        if (u <= 0) throw std::invalid_argument("log_fit: u must be positive");
        double x = std::log(u);
        sx += x;
        sy += v;
        sxx += x * x;
        sxy += x * v;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (denom == 0) throw std::invalid_argument("log_fit: degenerate abscissae");
    LogFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    for (const auto& [u, v] : pts) {
        double r = v - (f.intercept + f.slope * std::log(u));
        f.max_abs_residual = std::max(f.max_abs_residual, std::abs(r));
    }
    return f;
}

} // namespace favsites::stats
