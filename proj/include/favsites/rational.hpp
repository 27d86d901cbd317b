#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

// Exact arithmetic helpers shared by the kernel tables, the enumeration
// oracle, and the rational solver mode. All exact probabilities in this
// project are GMP rationals; dyadic values (integer over a power of two)
// are just the common special case.

namespace favsites {

using Rational = mpq_class;
using BigInt = mpz_class;

inline BigInt binomial(uint64_t n, uint64_t k) {
    BigInt r;
    if (k > n) return BigInt(0);
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

inline BigInt pow2(uint64_t e) {
    BigInt r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
    return r;
}

// num / 2^e in lowest terms.
inline Rational dyadic(const BigInt& num, uint64_t e) {
    Rational q(num, pow2(e));
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

} // namespace favsites
