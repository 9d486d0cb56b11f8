#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ckm/constants.hpp"
#include "ckm/errors.hpp"

namespace ckm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LE, GE, EQ };
enum class LpStatus { Optimal, Infeasible, Unbounded };

// Dense LP: minimize cost.x subject to row_coef[i].x (sense_i) row_rhs[i]
// and lo <= x <= hi. Lower bounds must be finite; hi entries may be +inf.
struct LinearProgram {
    int num_vars = 0;
    std::vector<double> cost, lo, hi;
    std::vector<std::vector<double>> row_coef;
    std::vector<RowSense> row_sense;
    std::vector<double> row_rhs;

    int add_var(double c, double l, double h) {
        cost.push_back(c);
        lo.push_back(l);
        hi.push_back(h);
        return num_vars++;
    }
    void add_row(std::vector<double> coef, RowSense s, double rhs) {
        require(static_cast<int>(coef.size()) == num_vars,
                "row length must match variable count");
        row_coef.push_back(std::move(coef));
        row_sense.push_back(s);
        row_rhs.push_back(rhs);
    }
    int num_rows() const { return static_cast<int>(row_rhs.size()); }
};

// Infeasibility certificate: multipliers combining rows and bounds into the
// contradiction 0 >= violation > 0. Identities:
//   sum_i row_mult[i]*row_coef[i][j] + lo_mult[j] - hi_mult[j] = 0   (all j)
//   sum_i row_mult[i]*row_rhs[i] + sum_j lo_mult[j]*lo[j]
//                                - sum_j hi_mult[j]*hi[j] = violation > 0
// Signs: row_mult[i] <= 0 for LE rows, >= 0 for GE rows, free for EQ;
// lo_mult, hi_mult >= 0; hi_mult[j] = 0 wherever hi[j] is infinite.
struct FarkasCertificate {
    std::vector<double> row_mult;
    std::vector<double> lo_mult;
    std::vector<double> hi_mult;
    double violation = 0.0;
};

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    std::vector<double> x;              // original space, when Optimal
    double objective = 0.0;
    std::vector<double> duals;          // per row at optimum; signs as row_mult
    std::vector<double> reduced_costs;  // per variable at optimum, bound
                                        // multipliers folded in
    std::vector<int> basis;             // per row: basic variable index, or -1
                                        // when a non-variable column is basic
    FarkasCertificate farkas;           // populated when Infeasible
};

// Largest absolute residual of the certificate's combination identity.
inline double farkas_residual(const LinearProgram& lp, const FarkasCertificate& f) {
    double worst = 0.0;
    for (int j = 0; j < lp.num_vars; ++j) {
        double comb = f.lo_mult[j] - f.hi_mult[j];
        for (int i = 0; i < lp.num_rows(); ++i) comb += f.row_mult[i] * lp.row_coef[i][j];
        worst = std::max(worst, std::abs(comb));
    }
    return worst;
}

inline double farkas_violation_value(const LinearProgram& lp, const FarkasCertificate& f) {
    double v = 0.0;
    for (int i = 0; i < lp.num_rows(); ++i) v += f.row_mult[i] * lp.row_rhs[i];
    for (int j = 0; j < lp.num_vars; ++j) {
        v += f.lo_mult[j] * lp.lo[j];
        if (std::isfinite(lp.hi[j])) v -= f.hi_mult[j] * lp.hi[j];
    }
    return v;
}

inline bool verify_farkas(const LinearProgram& lp, const FarkasCertificate& f) {
    if (static_cast<int>(f.row_mult.size()) != lp.num_rows()) return false;
    if (static_cast<int>(f.lo_mult.size()) != lp.num_vars) return false;
    if (static_cast<int>(f.hi_mult.size()) != lp.num_vars) return false;
    double scale = 1.0;
    for (int i = 0; i < lp.num_rows(); ++i) scale = std::max(scale, std::abs(f.row_mult[i]));
    for (int j = 0; j < lp.num_vars; ++j)
        scale = std::max({scale, f.lo_mult[j], f.hi_mult[j]});
    const double slack = tol::cert * scale * (lp.num_rows() + lp.num_vars + 1);
    for (int i = 0; i < lp.num_rows(); ++i) {
        if (lp.row_sense[i] == RowSense::LE && f.row_mult[i] > slack) return false;
        if (lp.row_sense[i] == RowSense::GE && f.row_mult[i] < -slack) return false;
    }
    for (int j = 0; j < lp.num_vars; ++j) {
        if (f.lo_mult[j] < -slack || f.hi_mult[j] < -slack) return false;
        if (!std::isfinite(lp.hi[j]) && std::abs(f.hi_mult[j]) > slack) return false;
    }
    if (farkas_residual(lp, f) > slack) return false;
    return farkas_violation_value(lp, f) > tol::cert;
}

// Largest bound/row violation of a candidate point, for feasibility checks.
inline double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (int j = 0; j < lp.num_vars; ++j) {
        worst = std::max(worst, lp.lo[j] - x[j]);
        if (std::isfinite(lp.hi[j])) worst = std::max(worst, x[j] - lp.hi[j]);
    }
    for (int i = 0; i < lp.num_rows(); ++i) {
        double act = 0.0;
        for (int j = 0; j < lp.num_vars; ++j) act += lp.row_coef[i][j] * x[j];
        double diff = act - lp.row_rhs[i];
        switch (lp.row_sense[i]) {
            case RowSense::LE: worst = std::max(worst, diff); break;
            case RowSense::GE: worst = std::max(worst, -diff); break;
            case RowSense::EQ: worst = std::max(worst, std::abs(diff)); break;
        }
    }
    return worst;
}

namespace detail {

// Two-phase full-tableau simplex over the bound-shifted standard form.
// Upper bounds become explicit rows; every row keeps a witness column
// (its slack or its artificial) so duals read off the objective rows.
//
// Long pivot chains on a dense tableau accumulate rounding drift, so the
// tableau is periodically rebuilt exactly from a pristine copy of the row
// data for the current basis.  Points, duals, and certificates are only
// ever read off a freshly rebuilt tableau, and the ratio test never takes
// a negative step even when drift pushes a basic value slightly below
// zero between rebuilds.
class Simplex {
  public:
    // `warm` optionally names, per LP row, the variable to start basic there
    // (-1 keeps the row's default slack/artificial). The hint is used only
    // when the resulting basis is nonsingular, primal feasible, and free of
    // artificials; otherwise the solve silently starts cold.
    explicit Simplex(const LinearProgram& lp, const std::vector<int>* warm = nullptr)
        : lp_(lp) {
        validate();
        build();
        if (warm) try_warm(*warm);
    }

    LpSolution run() {
        phase1();
        LpSolution sol;
        if (infeasible_) {
            sol.status = LpStatus::Infeasible;
            sol.farkas = extract_farkas();
            if (!verify_farkas(lp_, sol.farkas))
                throw numeric_error("infeasibility certificate failed verification");
            return sol;
        }
        if (!phase2()) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        sol.status = LpStatus::Optimal;
        sol.x.assign(lp_.num_vars, 0.0);
        for (int r = 0; r < m_; ++r)
            if (basis_[r] < lp_.num_vars) sol.x[basis_[r]] = std::max(rhs(r), 0.0);
        for (int j = 0; j < lp_.num_vars; ++j) sol.x[j] += lp_.lo[j];
        sol.objective = 0.0;
        for (int j = 0; j < lp_.num_vars; ++j) sol.objective += lp_.cost[j] * sol.x[j];
        double viol = max_violation(lp_, sol.x);
        if (viol > 10.0 * tol::feas)
            throw numeric_error("simplex produced an infeasible point (violation " +
                                std::to_string(viol) + ")");
        sol.duals.assign(lp_.num_rows(), 0.0);
        for (int i = 0; i < lp_.num_rows(); ++i)
            sol.duals[i] = row_flip_[i] * witness_dual(r2_, user_row_[i], 0.0);
        sol.reduced_costs.assign(lp_.num_vars, 0.0);
        for (int j = 0; j < lp_.num_vars; ++j) sol.reduced_costs[j] = r2_[j];
        sol.basis.assign(lp_.num_rows(), -1);
        for (int i = 0; i < lp_.num_rows(); ++i) {
            int c = basis_[user_row_[i]];
            if (c < lp_.num_vars) sol.basis[i] = c;
        }
        return sol;
    }

  private:
    const LinearProgram& lp_;
    int m_ = 0;       // standard-form rows
    int ncols_ = 0;   // variable + slack + artificial columns
    std::vector<double> tab_;        // m_ x (ncols_+1)
    std::vector<double> orig_;       // pristine copy of the initial tab_
    std::vector<double> r1_, r2_;    // objective rows, last entry = -value
    std::vector<int> basis_;
    std::vector<int> user_row_;      // lp row -> standard row
    std::vector<double> row_flip_;   // +1 / -1 applied to reach rhs >= 0
    std::vector<int> ub_row_;        // var -> standard row (or -1)
    std::vector<int> slack_col_, art_col_;   // per standard row, -1 if none
    std::vector<double> slack_sign_;         // per standard row
    std::vector<char> is_art_;               // per column
    long iters_ = 0;
    long since_rebuild_ = 0;
    bool clean_ = false;  // true while no pivot has followed the last rebuild
    bool warm_feasible_ = false;  // accepted warm basis; phase 1 is skipped

    double& at(int r, int c) { return tab_[static_cast<size_t>(r) * (ncols_ + 1) + c]; }
    double rhs(int r) { return at(r, ncols_); }
    bool infeasible_ = false;

    void validate() {
        require(static_cast<int>(lp_.cost.size()) == lp_.num_vars, "cost size mismatch");
        for (int j = 0; j < lp_.num_vars; ++j) {
            require(std::isfinite(lp_.lo[j]), "lower bounds must be finite");
            require(!(lp_.hi[j] < lp_.lo[j]), "hi < lo on a variable");
            require(std::isfinite(lp_.cost[j]), "costs must be finite");
        }
        for (int i = 0; i < lp_.num_rows(); ++i) {
            require(std::isfinite(lp_.row_rhs[i]), "row rhs must be finite");
            for (double a : lp_.row_coef[i]) require(std::isfinite(a), "row coef must be finite");
        }
    }

    void build() {
        const int n = lp_.num_vars;
        // Standard rows: user rows, then one upper-bound row per finite hi.
        struct RowSpec { std::vector<double> a; RowSense s; double b; int user; int ubvar; };
        std::vector<RowSpec> specs;
        user_row_.assign(lp_.num_rows(), -1);
        ub_row_.assign(n, -1);
        for (int i = 0; i < lp_.num_rows(); ++i) {
            RowSpec sp{lp_.row_coef[i], lp_.row_sense[i], lp_.row_rhs[i], i, -1};
            for (int j = 0; j < n; ++j) sp.b -= sp.a[j] * lp_.lo[j];
            specs.push_back(std::move(sp));
        }
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(lp_.hi[j])) continue;
            RowSpec sp{std::vector<double>(n, 0.0), RowSense::LE, lp_.hi[j] - lp_.lo[j], -1, j};
            sp.a[j] = 1.0;
            specs.push_back(std::move(sp));
        }
        m_ = static_cast<int>(specs.size());

        // Count columns: slacks for every inequality, artificials where the
        // slack cannot start basic.
        int nslack = 0, nart = 0;
        std::vector<double> flip(m_, 1.0);
        for (int r = 0; r < m_; ++r) {
            if (specs[r].b < 0.0) flip[r] = -1.0;
            if (specs[r].s != RowSense::EQ) ++nslack;
        }
        std::vector<int> scol(m_, -1), acol(m_, -1);
        std::vector<double> ssign(m_, 0.0);
        int next = n;
        for (int r = 0; r < m_; ++r) {
            if (specs[r].s == RowSense::EQ) continue;
            double sign = (specs[r].s == RowSense::LE ? 1.0 : -1.0) * flip[r];
            scol[r] = next++;
            ssign[r] = sign;
        }
        for (int r = 0; r < m_; ++r)
            if (scol[r] < 0 || ssign[r] < 0.0) { acol[r] = next++; ++nart; }
        (void)nslack;
        ncols_ = next;

        tab_.assign(static_cast<size_t>(m_) * (ncols_ + 1), 0.0);
        basis_.assign(m_, -1);
        is_art_.assign(ncols_, 0);
        row_flip_.assign(lp_.num_rows(), 1.0);
        for (int r = 0; r < m_; ++r) {
            const RowSpec& sp = specs[r];
            for (int j = 0; j < n; ++j) at(r, j) = flip[r] * sp.a[j];
            at(r, ncols_) = flip[r] * sp.b;
            if (scol[r] >= 0) at(r, scol[r]) = ssign[r];
            if (acol[r] >= 0) { at(r, acol[r]) = 1.0; is_art_[acol[r]] = 1; }
            basis_[r] = acol[r] >= 0 ? acol[r] : scol[r];
            if (sp.user >= 0) { user_row_[sp.user] = r; row_flip_[sp.user] = flip[r]; }
            if (sp.ubvar >= 0) ub_row_[sp.ubvar] = r;
        }
        slack_col_ = std::move(scol);
        art_col_ = std::move(acol);
        slack_sign_ = std::move(ssign);

        orig_ = tab_;
        recompute_objective(1, r1_);
        recompute_objective(2, r2_);
        clean_ = true;
    }

    // Adopts a warm basis when it is well-formed, artificial-free,
    // nonsingular, and primal feasible after an exact rebuild; any defect
    // falls back to the default starting basis.
    void try_warm(const std::vector<int>& warm) {
        if (static_cast<int>(warm.size()) != lp_.num_rows()) return;
        std::vector<int> cand = basis_;
        for (int i = 0; i < lp_.num_rows(); ++i) {
            int c = warm[i];
            if (c < 0) continue;
            if (c >= lp_.num_vars) return;
            cand[user_row_[i]] = c;
        }
        std::vector<char> used(ncols_, 0);
        for (int r = 0; r < m_; ++r) {
            if (is_art_[cand[r]] || used[cand[r]]) return;
            used[cand[r]] = 1;
        }
        std::vector<int> saved = basis_;
        basis_ = std::move(cand);
        try {
            rebuild();
        } catch (const numeric_error&) {
            basis_ = std::move(saved);
            rebuild();
            return;
        }
        for (int r = 0; r < m_; ++r)
            if (rhs(r) < -tol::feas) {
                basis_ = std::move(saved);
                rebuild();
                return;
            }
        warm_feasible_ = true;
    }

    // Cost of a standard-form column under the phase-1 or phase-2 objective.
    double std_cost(int c, int phase) const {
        if (phase == 1) return is_art_[c] ? 1.0 : 0.0;
        return c < lp_.num_vars ? lp_.cost[c] : 0.0;
    }

    // Reduced-cost row for the current basis, computed from scratch:
    // obj[c] = cost(c) - cost(basic) . tab[.][c], last entry = -objective.
    void recompute_objective(int phase, std::vector<double>& obj) {
        obj.assign(ncols_ + 1, 0.0);
        for (int c = 0; c < ncols_; ++c) obj[c] = std_cost(c, phase);
        for (int r = 0; r < m_; ++r) {
            double f = std_cost(basis_[r], phase);
            if (f == 0.0) continue;
            const double* row = &at(r, 0);
            for (int c = 0; c <= ncols_; ++c) obj[c] -= f * row[c];
        }
        for (int r = 0; r < m_; ++r) obj[basis_[r]] = 0.0;
    }

    // Rebuilds tab_ = B^{-1} . orig_ exactly for the current basis via
    // Gauss-Jordan elimination with partial pivoting, then recomputes both
    // objective rows. Removes all drift accumulated by pivoting.
    void rebuild() {
        if (m_ > 0) {
            const int w = ncols_ + 1;
            const int aw = m_ + w;
            std::vector<double> aug(static_cast<size_t>(m_) * aw);
            double scale = 1.0;
            for (int r = 0; r < m_; ++r) {
                const double* o = &orig_[static_cast<size_t>(r) * w];
                double* a = &aug[static_cast<size_t>(r) * aw];
                for (int i = 0; i < m_; ++i) {
                    a[i] = o[basis_[i]];
                    scale = std::max(scale, std::abs(a[i]));
                }
                std::copy(o, o + w, a + m_);
            }
            std::vector<int> prow(m_, -1);
            std::vector<char> used(m_, 0);
            for (int k = 0; k < m_; ++k) {
                int p = -1;
                double best = 1e-13 * scale;
                for (int r = 0; r < m_; ++r) {
                    if (used[r]) continue;
                    double v = std::abs(aug[static_cast<size_t>(r) * aw + k]);
                    if (v > best) { best = v; p = r; }
                }
                if (p < 0) throw numeric_error("simplex basis rebuild hit a singular basis");
                used[p] = 1;
                prow[k] = p;
                double* pr = &aug[static_cast<size_t>(p) * aw];
                double inv = 1.0 / pr[k];
                for (int c = k; c < aw; ++c) pr[c] *= inv;
                pr[k] = 1.0;
                for (int r = 0; r < m_; ++r) {
                    if (r == p) continue;
                    double* rr = &aug[static_cast<size_t>(r) * aw];
                    double f = rr[k];
                    if (std::abs(f) < 1e-14) continue;
                    for (int c = k; c < aw; ++c) rr[c] -= f * pr[c];
                    rr[k] = 0.0;
                }
            }
            for (int k = 0; k < m_; ++k) {
                const double* src = &aug[static_cast<size_t>(prow[k]) * aw + m_];
                std::copy(src, src + w, &at(k, 0));
            }
            for (int k = 0; k < m_; ++k)
                for (int i = 0; i < m_; ++i) at(k, basis_[i]) = (i == k) ? 1.0 : 0.0;
        }
        recompute_objective(1, r1_);
        recompute_objective(2, r2_);
        since_rebuild_ = 0;
        clean_ = true;
    }

    void pivot(int prow, int pcol) {
        double* p = &at(prow, 0);
        double inv = 1.0 / p[pcol];
        for (int c = 0; c <= ncols_; ++c) p[c] *= inv;
        p[pcol] = 1.0;
        auto elim = [&](double* row) {
            double f = row[pcol];
            if (std::abs(f) < 1e-14) return;
            for (int c = 0; c <= ncols_; ++c) row[c] -= f * p[c];
            row[pcol] = 0.0;
        };
        for (int r = 0; r < m_; ++r)
            if (r != prow) elim(&at(r, 0));
        elim(r1_.data());
        elim(r2_.data());
        basis_[prow] = pcol;
        ++since_rebuild_;
        clean_ = false;
    }

    bool drifted() {
        for (int r = 0; r < m_; ++r)
            if (rhs(r) < -tol::feas) return true;
        return false;
    }

    int pick_enter(const std::vector<double>& obj, bool bland) const {
        if (bland) {
            for (int c = 0; c < ncols_; ++c)
                if (!is_art_[c] && obj[c] < -tol::pivot) return c;
            return -1;
        }
        int enter = -1;
        double best = -tol::pivot;
        for (int c = 0; c < ncols_; ++c)
            if (!is_art_[c] && obj[c] < best) { best = obj[c]; enter = c; }
        return enter;
    }

    // Two-pass ratio test. Ratios clamp slightly negative basic values to
    // zero so no step is ever negative; among rows tied near the minimum
    // ratio the largest pivot element wins (smallest basic index under the
    // anti-cycling rule). Returns -1 when no row blocks (unbounded ray).
    int pick_leave(int enter, bool bland) {
        double theta = kInf;
        for (int r = 0; r < m_; ++r) {
            double a = at(r, enter);
            if (a <= tol::pivot) continue;
            theta = std::min(theta, std::max(rhs(r), 0.0) / a);
        }
        if (theta == kInf) return -1;
        int leave = -1;
        if (bland) {
            for (int r = 0; r < m_; ++r) {
                double a = at(r, enter);
                if (a <= tol::pivot) continue;
                if (std::max(rhs(r), 0.0) / a <= theta + 1e-12 &&
                    (leave < 0 || basis_[r] < basis_[leave]))
                    leave = r;
            }
        } else {
            const double window = theta + 1e-9 * (1.0 + theta);
            double best = 0.0;
            for (int r = 0; r < m_; ++r) {
                double a = at(r, enter);
                if (a <= tol::pivot) continue;
                if (std::max(rhs(r), 0.0) / a <= window && a > best) {
                    best = a;
                    leave = r;
                }
            }
        }
        return leave;
    }

    // Price-and-pivot loop on the phase's objective row. Artificial columns
    // never enter. Optimality and unboundedness are only ever declared on a
    // freshly rebuilt tableau. Returns false if unbounded.
    bool optimize(int phase) {
        std::vector<double>& obj = phase == 1 ? r1_ : r2_;
        const long bland_after = 5L * (m_ + ncols_) + 200;
        const long limit = static_cast<long>(budget::simplex_iters_per_dim) * (m_ + 1) + 10000;
        const long cadence = std::max<long>(64, m_);
        while (true) {
            if (++iters_ > limit) throw resource_error("simplex iteration limit exceeded");
            if (since_rebuild_ >= cadence || (!clean_ && drifted())) rebuild();
            const bool bland = iters_ > bland_after;
            int enter = pick_enter(obj, bland);
            if (enter < 0) {
                if (clean_) return true;
                rebuild();
                enter = pick_enter(obj, bland);
                if (enter < 0) return true;
            }
            int leave = pick_leave(enter, bland);
            if (leave < 0) {
                if (clean_) return false;
                rebuild();
                continue;
            }
            pivot(leave, enter);
        }
    }

    void phase1() {
        if (warm_feasible_) return;
        bool fin = optimize(1);
        require(fin, "phase-1 objective is bounded by construction");
        double art_sum = -r1_[ncols_];
        if (art_sum > tol::feas) { infeasible_ = true; return; }
        // Pivot residual artificials out where a real pivot exists.
        for (int r = 0; r < m_; ++r) {
            if (basis_[r] < 0 || !is_art_[basis_[r]]) continue;
            for (int c = 0; c < ncols_; ++c)
                if (!is_art_[c] && std::abs(at(r, c)) > tol::pivot) { pivot(r, c); break; }
        }
    }

    bool phase2() { return optimize(2); }

    // Dual of standard row r, read from objective row `obj` via the row's
    // witness column. art_cost is that column's cost in this objective.
    double witness_dual(const std::vector<double>& obj, int r, double art_cost) const {
        if (slack_col_[r] >= 0) return -slack_sign_[r] * obj[slack_col_[r]];
        return art_cost - obj[art_col_[r]];
    }

    FarkasCertificate extract_farkas() {
        FarkasCertificate f;
        f.row_mult.assign(lp_.num_rows(), 0.0);
        f.lo_mult.assign(lp_.num_vars, 0.0);
        f.hi_mult.assign(lp_.num_vars, 0.0);
        std::vector<double> y(m_, 0.0);
        for (int r = 0; r < m_; ++r) y[r] = witness_dual(r1_, r, art_col_[r] >= 0 ? 1.0 : 0.0);
        for (int i = 0; i < lp_.num_rows(); ++i)
            f.row_mult[i] = row_flip_[i] * y[user_row_[i]];
        for (int j = 0; j < lp_.num_vars; ++j) {
            if (ub_row_[j] >= 0) f.hi_mult[j] = std::max(0.0, -y[ub_row_[j]]);
            double comb = -f.hi_mult[j];
            for (int i = 0; i < lp_.num_rows(); ++i) comb += f.row_mult[i] * lp_.row_coef[i][j];
            f.lo_mult[j] = std::max(0.0, -comb);
        }
        f.violation = farkas_violation_value(lp_, f);
        return f;
    }
};

}  // namespace detail

// Solves the LP. `warm` optionally names, per row, a variable to start
// basic in that row (-1 = default); the hint is validated and silently
// dropped when unusable, so passing a stale basis is always safe.
inline LpSolution solve_lp(const LinearProgram& lp, const std::vector<int>* warm = nullptr) {
    detail::Simplex s(lp, warm);
    return s.run();
}

}  // namespace ckm
