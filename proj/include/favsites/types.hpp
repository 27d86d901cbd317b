#pragma once

#include <stdexcept>
#include <string>

namespace favsites {

// Boundary handling for the spliced branching profile at the origin.
//
// verbatim:          splice exactly as the three-chain construction reads,
//                    with a plain pi step across the origin seam (x >= 1)
//                    and the left seed taken at face value (x <= 0).
// origin_immigration: the variant that matches the walk law in exhaustive
//                    checks: an immigration (rho) step for the site-0 to
//                    site -1 transition when x >= 1, and the left seed
//                    raised by one when x <= 0.
enum class Boundary { verbatim, origin_immigration };

inline const char* name(Boundary b) {
    return b == Boundary::verbatim ? "verbatim" : "origin-immigration";
}

inline Boundary parse_boundary(const std::string& s) {
    if (s == "verbatim") return Boundary::verbatim;
    if (s == "origin-immigration" || s == "origin_immigration")
        return Boundary::origin_immigration;
    throw std::invalid_argument("unknown boundary variant: " + s);
}

} // namespace favsites
