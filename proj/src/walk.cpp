#include "favsites/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace favsites::walk {

std::vector<int64_t> WalkObservables::favorites() const {
    std::vector<int64_t> out;
    if (t_ == 0) return out;
    for (int64_t x = L_.min_site(); x <= L_.max_site(); ++x)
        if (L_[x] == maxL_) out.push_back(x);
    return out;
}

std::optional<UpcrossEvent> WalkObservables::advance(int step) {
    if (step != 1 && step != -1) throw std::invalid_argument("step must be +-1");
    ++t_;
    last_step_ = step;
    std::optional<UpcrossEvent> ev;
    if (step == 1) {
        ++pos_;
        int64_t& u = U_.at(pos_);
        ev = UpcrossEvent{pos_, u, t_, 0};
        ++u;
    } else {
        --pos_;
        ++D_.at(pos_);
    }
    int64_t& l = L_.at(pos_);
    ++l;
    if (ev) ev->h = l;

    // Each step raises exactly one local time by one, so the maximum can
    // only grow by one (fresh unique argmax) or gain one more attainer.
    if (l > maxL_) {
        maxL_ = l;
        argmax_count_ = 1;
    } else if (l == maxL_) {
        ++argmax_count_;
    }

    f3_bumped_ = false;
    if (l == maxL_) { // current site is a favorite
        auto r = static_cast<size_t>(argmax_count_);
        if (r >= f_.size()) f_.resize(r + 1, 0);
        ++f_[r];
        if (r == 3) f3_bumped_ = true;
    }
    return ev;
}

std::optional<IdentityViolation>
WalkObservables::check_local_time_identity() const {
    int64_t lo = std::min<int64_t>({L_.min_site(), U_.min_site(), D_.min_site(), 0}) - 1;
    int64_t hi = std::max<int64_t>({L_.max_site(), U_.max_site(), D_.max_site(), 0}) + 1;
    for (int64_t x = lo; x <= hi; ++x) {
        int64_t l = L_[x];
        int64_t viaD = D_[x] + D_[x - 1] + (0 < x && x <= pos_ ? 1 : 0) -
                       (pos_ < x && x <= 0 ? 1 : 0);
        if (l != viaD) return IdentityViolation{x, 'D', l, viaD};
        int64_t viaU = U_[x] + U_[x + 1] + (pos_ <= x && x < 0 ? 1 : 0) -
                       (0 <= x && x < pos_ ? 1 : 0);
        if (l != viaU) return IdentityViolation{x, 'U', l, viaU};
    }
    return std::nullopt;
}

bool in_I_h(int64_t h, int64_t k) {
    int64_t m = 2 * k - h;
    return m >= 1 && m * m > h && m * m < 4 * h;
}

std::optional<AHit> detect_A_event(const UpcrossEvent& ev,
                                   const WalkObservables& w, int64_t H) {
    if (ev.x < 1 || ev.h > H) return std::nullopt;
    if (!in_I_h(ev.h, ev.k)) return std::nullopt;
    if (w.argmax_count() != 3) return std::nullopt;
    if (ev.h != w.max_local_time()) return std::nullopt;
    // Exactly three sites attain the maximum; if these three do, they are it.
    if (w.L(ev.x) != ev.h || w.L(ev.x + 1) != ev.h || w.L(ev.x + 2) != ev.h)
        return std::nullopt;
    return AHit{ev.x, ev.h, ev.k, ev.t};
}

double psi(uint64_t t) {
    if (t < 2) return 0.0;
    double lt = std::log(static_cast<double>(t));
    return std::sqrt(static_cast<double>(t)) * std::pow(lt, -11.0);
}

SimSummary simulate(uint64_t seed, const StopRule& rule,
                    const std::vector<uint64_t>& checkpoints) {
    auto gen = rng::Xoshiro256pp::seeded(seed);
    WalkObservables w;
    SimSummary out;

    std::vector<uint64_t> cps(checkpoints);
    std::sort(cps.begin(), cps.end());
    size_t cp = 0;

    uint64_t bits = 0;
    int nbits = 0;
    auto coin = [&]() -> int {
        if (nbits == 0) {
            bits = gen.next();
            nbits = 64;
        }
        int b = static_cast<int>(bits & 1);
        bits >>= 1;
        --nbits;
        return b ? 1 : -1;
    };

    auto checkpoint = [&]() {
        auto fav = w.favorites();
        int64_t d = fav.empty() ? 0 : std::abs(fav.front());
        for (int64_t x : fav) d = std::min(d, std::abs(x));
        out.transience.push_back(TransienceRow{w.t(), d, psi(w.t())});
        if (w.check_local_time_identity()) out.identity_ok = false;
    };

    bool stop = false;
    while (!stop) {
        if (w.t() >= rule.hard_cap) {
            out.capped = true;
            break;
        }
        auto ev = w.advance(coin());
        if (ev) {
            if (auto hit = detect_A_event(*ev, w, rule.H)) {
                ++out.a_hits;
                if (out.hits.size() < 1024) out.hits.push_back(*hit);
            }
        }
        while (cp < cps.size() && w.t() >= cps[cp]) {
            checkpoint();
            ++cp;
        }
        switch (rule.kind) {
        case StopRule::fixed_steps:
            stop = w.t() >= rule.t_max;
            break;
        case StopRule::first_A_hit:
            stop = out.a_hits > 0;
            break;
        case StopRule::first_f3_at_level:
            stop = w.f3_bumped() && w.max_local_time() >= rule.h_min;
            break;
        }
    }

    if (w.check_local_time_identity()) out.identity_ok = false;
    out.t = w.t();
    out.pos = w.pos();
    out.max_local_time = w.max_local_time();
    out.f = w.f_counters();
    return out;
}

} // namespace favsites::walk
