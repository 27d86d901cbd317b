#pragma once

// Small statistics toolkit for comparing empirical counts against exact
// distributions: total variation, Pearson chi-square with pooling, running
// mean/SE, and a least-squares fit in log H.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace favsites::stats {

// Probability mass on integer buckets plus an optional explicit residual
// category (mass of "none of the listed buckets", e.g. truncation).
struct Pmf {
    std::map<int64_t, double> p;
    double residual = 0.0;
    double total() const;
};

struct Counts {
    std::map<int64_t, uint64_t> n;
    uint64_t residual = 0;
    uint64_t total() const;
};

// Both arguments must be normalized to 1 within 1e-6 (residual included).
double tv_distance(const Pmf& a, const Pmf& b);

enum class Verdict { pass, fail, inconclusive };
const char* name(Verdict v);

struct ChiSquareReport {
    double stat = 0.0;
    int dof = 0;
    double p_value = 1.0;
    uint64_t n = 0;
    int cells = 0;           // after pooling
    double min_expected = 0; // smallest pooled expected count
    double tv = 0.0;         // empirical-vs-expected total variation
    Verdict verdict = Verdict::inconclusive;
    std::string note;
};

// Pearson goodness of fit of observed counts against an exact pmf.  Cells
// with expected count below floor_count are pooled together (ascending
// expected mass).  Observed mass where the expected probability is exactly
// zero is an immediate fail.  dof = pooled cells - 1.
ChiSquareReport chi_square(const Counts& obs, const Pmf& expected,
                           double alpha = 1e-3, double floor_count = 5.0);

// Upper tail of the chi-square distribution (regularized incomplete gamma).
double chi_square_survival(double stat, int dof);

struct MeanCI {
    double mean = 0, se = 0, lo = 0, hi = 0; // lo/hi = mean -/+ 3 se
    uint64_t n = 0;
};
MeanCI mean_ci(const std::vector<double>& xs);
MeanCI mean_ci_moments(double sum, double sumsq, uint64_t n);
bool ci_overlap(const MeanCI& a, const MeanCI& b);

struct LogFit {
    double slope = 0, intercept = 0;
    double max_abs_residual = 0;
};
// Least squares of v on log u over points (u, v), u > 0.
LogFit log_fit(const std::vector<std::pair<double, double>>& pts);

} // namespace favsites::stats
