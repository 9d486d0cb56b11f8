#pragma once
// Build and solve the relaxation of capacitated k-median over fractional
// openings y and fractional assignments x, optionally with accumulated
// separating cuts, and derive the per-client / per-facility cost shares
// that the rounding stages consume.

#include <cstddef>
#include <string>
#include <vector>

#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/instance.hpp"
#include "ckm/lp.hpp"

namespace ckm {

// A fractional solution to the relaxation.
//   x: row-major nF x nC assignment matrix, x[i*nC+j] = mass of client j on i
//   y: per-facility opening mass
//   lp_value: sum of d(i,j) * x_{i,j}
struct FractionalSolution {
  std::vector<double> x;
  std::vector<double> y;
  double lp_value = 0.0;
};

// A linear inequality over (x, y) of the form
//   sigma + sum_i beta[i] * y_i + sum_{i,j} gamma[i*nC+j] * x_{i,j} <= 0.
// Cuts are produced from infeasibility certificates of per-group
// configuration systems and accumulated into the master relaxation.
struct Cut {
  double sigma = 0.0;
  std::vector<double> beta;   // length nF
  std::vector<double> gamma;  // length nF * nC
};

// Evaluates the left-hand side of a cut at (x, y).  Positive values mean the
// point violates the cut.
inline double cut_value(const Cut& cut, const std::vector<double>& x,
                        const std::vector<double>& y) {
  require(cut.beta.size() == y.size(), "cut_value: beta width mismatch");
  require(cut.gamma.size() == x.size(), "cut_value: gamma width mismatch");
  double v = cut.sigma;
  for (std::size_t i = 0; i < y.size(); ++i) v += cut.beta[i] * y[i];
  for (std::size_t e = 0; e < x.size(); ++e) v += cut.gamma[e] * x[e];
  return v;
}

// Per-client and per-facility cost shares of a fractional solution.
//   d_av[j]   = sum_i x_{i,j} d(i,j)      (average service distance of j)
//   D[i]      = sum_j x_{i,j} d(i,j)      (cost mass routed through i)
//   Dprime[i] = sum_j x_{i,j} d_av(j)     (average-distance mass through i)
// Both facility totals equal the LP value.
struct CostShares {
  std::vector<double> d_av;    // length nC
  std::vector<double> D;       // length nF
  std::vector<double> Dprime;  // length nF
};

namespace detail {

// Variable layout of the master LP: x_{i,j} at i*nC+j, then y_i at nF*nC+i.
inline std::size_t xvar(const Instance& inst, int i, int j) {
  return static_cast<std::size_t>(i) * inst.num_clients +
         static_cast<std::size_t>(j);
}
inline std::size_t yvar(const Instance& inst, int i) {
  return static_cast<std::size_t>(inst.num_facilities) * inst.num_clients +
         static_cast<std::size_t>(i);
}

}  // namespace detail

// Builds the master relaxation as an explicit LP.
// Variables: x_{i,j} (i*nC+j) then y_i (nF*nC+i), all in [0,1].
// Rows, in order:
//   1 row   : sum_i y_i <= k
//   nC rows : sum_i x_{i,j} = 1              (each client fully assigned)
//   nF*nC   : x_{i,j} - y_i <= 0             (assign only to open mass)
//   nF rows : sum_j x_{i,j} - u_i y_i <= 0   (capacity)
//   1 row per cut: gamma . x + beta . y <= -sigma
inline LinearProgram build_basic_lp(const Instance& inst,
                                    const std::vector<Cut>& cuts = {}) {
  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  const std::size_t nx = static_cast<std::size_t>(nf) * nc;
  LinearProgram lp;
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nc; ++j) lp.add_var(inst.d_fc(i, j), 0.0, 1.0);
  for (int i = 0; i < nf; ++i) lp.add_var(0.0, 0.0, 1.0);

  std::vector<double> row(lp.num_vars, 0.0);

  // sum_i y_i <= k
  for (int i = 0; i < nf; ++i) row[detail::yvar(inst, i)] = 1.0;
  lp.add_row(row, RowSense::LE, static_cast<double>(inst.k));
  std::fill(row.begin(), row.end(), 0.0);

  // each client fully assigned
  for (int j = 0; j < nc; ++j) {
    for (int i = 0; i < nf; ++i) row[detail::xvar(inst, i, j)] = 1.0;
    lp.add_row(row, RowSense::EQ, 1.0);
    for (int i = 0; i < nf; ++i) row[detail::xvar(inst, i, j)] = 0.0;
  }

  // x_{i,j} <= y_i
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nc; ++j) {
      row[detail::xvar(inst, i, j)] = 1.0;
      row[detail::yvar(inst, i)] = -1.0;
      lp.add_row(row, RowSense::LE, 0.0);
      row[detail::xvar(inst, i, j)] = 0.0;
      row[detail::yvar(inst, i)] = 0.0;
    }
  }

  // capacity: sum_j x_{i,j} <= u_i y_i
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nc; ++j) row[detail::xvar(inst, i, j)] = 1.0;
    row[detail::yvar(inst, i)] = -static_cast<double>(inst.capacities[i]);
    lp.add_row(row, RowSense::LE, 0.0);
    for (int j = 0; j < nc; ++j) row[detail::xvar(inst, i, j)] = 0.0;
    row[detail::yvar(inst, i)] = 0.0;
  }

  // accumulated cuts
  for (const Cut& cut : cuts) {
    require(cut.beta.size() == static_cast<std::size_t>(nf),
            "build_basic_lp: cut beta width mismatch");
    require(cut.gamma.size() == nx, "build_basic_lp: cut gamma width mismatch");
    for (std::size_t e = 0; e < nx; ++e) row[e] = cut.gamma[e];
    for (int i = 0; i < nf; ++i) row[detail::yvar(inst, i)] = cut.beta[i];
    lp.add_row(row, RowSense::LE, -cut.sigma);
    std::fill(row.begin(), row.end(), 0.0);
  }
  return lp;
}

// Largest violation of the relaxation's constraints at (x, y); values at or
// below the feasibility tolerance mean (x, y) is feasible.  Cuts are not
// checked here (use cut_value per cut).
inline double basic_violation(const Instance& inst,
                              const std::vector<double>& x,
                              const std::vector<double>& y) {
  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  require(x.size() == static_cast<std::size_t>(nf) * nc,
          "basic_violation: x size");
  require(y.size() == static_cast<std::size_t>(nf), "basic_violation: y size");
  double worst = 0.0;
  auto hit = [&](double v) { worst = std::max(worst, v); };
  double ysum = 0.0;
  for (int i = 0; i < nf; ++i) {
    ysum += y[i];
    hit(-y[i]);
    hit(y[i] - 1.0);
  }
  hit(ysum - static_cast<double>(inst.k));
  for (int j = 0; j < nc; ++j) {
    double mass = 0.0;
    for (int i = 0; i < nf; ++i) mass += x[detail::xvar(inst, i, j)];
    hit(std::abs(mass - 1.0));
  }
  for (int i = 0; i < nf; ++i) {
    double load = 0.0;
    for (int j = 0; j < nc; ++j) {
      const double xv = x[detail::xvar(inst, i, j)];
      load += xv;
      hit(-xv);
      hit(xv - 1.0);
      hit(xv - y[i]);
    }
    hit(load - inst.capacities[i] * y[i]);
  }
  return worst;
}

// Builds and solves the master relaxation.  Throws input_error if the bare
// relaxation is infeasible (the instance cannot serve its clients), and
// algorithm_failure if the relaxation became infeasible only after adding
// cuts — identifying the first cut whose addition kills feasibility.
inline FractionalSolution solve_basic(const Instance& inst,
                                      const std::vector<Cut>& cuts = {}) {
  LpSolution out = solve_lp(build_basic_lp(inst, cuts));
  if (out.status == LpStatus::Infeasible) {
    if (cuts.empty())
      throw input_error(
          "relaxation infeasible: total capacity of any k openings cannot "
          "cover all clients");
    // Identify the first cut prefix that becomes infeasible.
    std::size_t lo = 1, hi = cuts.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      std::vector<Cut> prefix(cuts.begin(), cuts.begin() + mid);
      if (solve_lp(build_basic_lp(inst, prefix)).status ==
          LpStatus::Infeasible)
        hi = mid;
      else
        lo = mid + 1;
    }
    throw algorithm_failure("relaxation infeasible after adding cut #" +
                            std::to_string(lo - 1) +
                            " (0-based); the cut is not valid");
  }
  require(out.status == LpStatus::Optimal,
          "solve_basic: unexpected unbounded outcome");

  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  const std::size_t nx = static_cast<std::size_t>(nf) * nc;
  FractionalSolution frac;
  frac.x.assign(out.x.begin(), out.x.begin() + nx);
  frac.y.assign(out.x.begin() + nx, out.x.end());
  // Snap tiny negative noise and recompute the value in one pass.
  for (double& v : frac.x) v = std::clamp(v, 0.0, 1.0);
  for (double& v : frac.y) v = std::clamp(v, 0.0, 1.0);
  double value = 0.0;
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nc; ++j)
      value += inst.d_fc(i, j) * frac.x[detail::xvar(inst, i, j)];
  frac.lp_value = value;

  const double viol = basic_violation(inst, frac.x, frac.y);
  require(viol <= 10 * tol::feas,
          "solve_basic: solver output violates the relaxation");
  return frac;
}

// Computes the cost shares of a fractional solution.
inline CostShares cost_shares(const Instance& inst,
                              const FractionalSolution& frac) {
  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  require(frac.x.size() == static_cast<std::size_t>(nf) * nc,
          "cost_shares: x size");
  CostShares cs;
  cs.d_av.assign(nc, 0.0);
  cs.D.assign(nf, 0.0);
  cs.Dprime.assign(nf, 0.0);
  for (int j = 0; j < nc; ++j) {
    double acc = 0.0;
    for (int i = 0; i < nf; ++i)
      acc += frac.x[detail::xvar(inst, i, j)] * inst.d_fc(i, j);
    cs.d_av[j] = acc;
  }
  for (int i = 0; i < nf; ++i) {
    double di = 0.0, dpi = 0.0;
    for (int j = 0; j < nc; ++j) {
      const double xv = frac.x[detail::xvar(inst, i, j)];
      di += xv * inst.d_fc(i, j);
      dpi += xv * cs.d_av[j];
    }
    cs.D[i] = di;
    cs.Dprime[i] = dpi;
  }
  return cs;
}

// Total connection cost sum d(i,j) x_{i,j} of an assignment matrix.
inline double connection_cost(const Instance& inst,
                              const std::vector<double>& x) {
  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  require(x.size() == static_cast<std::size_t>(nf) * nc,
          "connection_cost: x size");
  double value = 0.0;
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nc; ++j)
      value += inst.d_fc(i, j) * x[detail::xvar(inst, i, j)];
  return value;
}

}  // namespace ckm
