#pragma once

#include <cmath>
#include <cstdint>

#include "ckm/errors.hpp"

namespace ckm {

// Numeric tolerances, pinned once for the whole library.
namespace tol {
// LP feasibility: row residuals, bound violations, acceptance comparisons.
inline constexpr double feas = 1e-7;
// Certificates and metric checks: quantities that should be zero or strictly
// signed up to accumulated floating error.
inline constexpr double cert = 1e-9;
// Below this a client-facility mass is treated as absent.
inline constexpr double mass = 1e-12;
// Simplex pivot admissibility.
inline constexpr double pivot = 1e-9;
}  // namespace tol

// Enumeration budgets; exceeding one is a hard resource error, never a
// silent truncation.
namespace budget {
inline constexpr std::uint64_t config_sets = 1u << 16;   // subsets per facility group
inline constexpr std::uint64_t exact_multisets = 400000; // open-set multisets in the exact solver
inline constexpr int simplex_iters_per_dim = 400;        // pivots allowed per (rows+cols)
inline constexpr std::uint64_t direct_cells = 3000000;   // dense tableau cells for a
                                                         // one-shot feasibility solve
inline constexpr int column_rounds = 1000;               // pricing rounds per system
inline constexpr int column_limit = 8000;                // generated columns per system
}  // namespace budget

// Parameters that drive the configuration-based rounding. All are derived
// from the accuracy knob epsilon in (0, 2]:
//   ell   = ceil(5/epsilon)   group weight threshold
//   ell1  = 2*ell + 2         max explicit open-set size per group
//   delta_max bounds the number of size-rank classes a group can have:
//   the scaled budget Y = (1+1/ell)*y_B never exceeds 2*ell*(1+1/ell),
//   so rank values stay below floor(log2(2*ell*(1+1/ell))) + 2 (base-2 log).
//   ell2  = 9 * ell * delta_max, chosen so that both preconditions of the
//   pre-assignment argument hold for every group processed:
//     3/q      <= ell2   (q >= 1/(3*delta*ell) is the chosen rank-class mass)
//     6*ell*delta <= ell2
struct GuaranteeParams {
    double epsilon = 1.0;
    int ell = 5;
    int ell1 = 12;
    int delta_max = 5;
    int ell2 = 225;

    static GuaranteeParams from_epsilon(double epsilon) {
        require_input(epsilon > 0.0 && epsilon <= 2.0, "epsilon must lie in (0, 2]");
        GuaranteeParams p;
        p.epsilon = epsilon;
        p.ell = static_cast<int>(std::ceil(5.0 / epsilon));
        p.ell1 = 2 * p.ell + 1 + 1;
        double y_cap = 2.0 * p.ell * (1.0 + 1.0 / p.ell);
        p.delta_max = static_cast<int>(std::floor(std::log2(y_cap))) + 2;
        p.ell2 = 9 * p.ell * p.delta_max;
        return p;
    }
};

// Explicit end-to-end cost factor for the configuration rounding, assembled
// from the analysis chain. Every successful run satisfies
//   cost <= K(ell, ell2) * lp_value
// with K the sum of:
//   1            clients to their fractional facilities (sum of d_av)
//   ell2         pre-assignment cost, at most ell2 * D_B per group, groups disjoint
//   10           in-group transport to/from the group's anchor representative:
//                2*(D + 4*D') summed over disjoint cells = 2*lp + 8*lp
//   224*ell*ell2 cross-group transport along forest paths: demand per group is
//                at most ell2 * pi, each unit travels at most 8*ell edges of
//                length d(J, R\J) in each direction (factor 16*ell), and
//                d(J, R\J) * pi(J) <= 4*D(U_J) + 10*D'(U_J), whose disjoint sums
//                give 14*lp; 16*ell * ell2 * 14 = 224*ell*ell2.
inline double cost_guarantee_factor(int ell, int ell2) {
    return 1.0 + static_cast<double>(ell2) + 10.0 +
           224.0 * static_cast<double>(ell) * static_cast<double>(ell2);
}

}  // namespace ckm
