#pragma once

#include <cstdint>

// Constants frozen from one-off pilot runs of the same estimators at the
// same parameters the battery uses.  Every Monte Carlo criterion below
// runs with a fixed master seed and a fixed worker count, so the pilot
// values reproduce exactly; the floors and brackets are insurance against
// platform or toolchain drift, not against statistical noise.

namespace accept {

// Master seed shared by every seeded experiment in the battery.
inline constexpr uint64_t kSeed = 20210607;

// Push-down mass ratio floor, exact rational arithmetic, x = 1 anchors.
// Pilot ratios: 16394.1 (h=25, k=17), 308056.5 (h=49, k=30),
// 2.7227e9 (h=100, k=58).  The family size grows with h, so the ratio
// grows too; the floor sits just under the smallest grid value.
inline constexpr double kFlucRatioMin = 16384.0;

// Occupation-deficit ratio to sqrt(h), 1e5 reps, 4 workers.
// Pilot: 1.177 (h=100, k=85), 1.202 (h=400, k=370), 1.192 (h=1600, k=1540).
inline constexpr double kEfracRatioMin = 0.9;
inline constexpr double kEfracSpreadMax = 2.0;

// Second-moment ratio E[N^2] / (E[N] log H) at t_max 1e4, 1e6 reps,
// 4 workers.  Pilot: 0.302069 (H=30, 73 hits), 0.276190 (H=50, 174 hits).
inline constexpr double kM2Lo30 = 0.15, kM2Hi30 = 0.60;
inline constexpr double kM2Lo50 = 0.13, kM2Hi50 = 0.55;

// Direct-walk event frequency cross-check: reps sized so every cell
// expects at least ~10 hits (exact probabilities range 2.5e-7..1.8e-6).
inline constexpr uint64_t kCellReps = 40000000;
inline constexpr uint64_t kCellTCap = 100000;

} // namespace accept
