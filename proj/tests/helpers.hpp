#pragma once

// Shared test utilities: independent brute-force oracles that the tests
// trust instead of the library's own solvers, plus small fixtures used
// across the suite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ckm/basiclp.hpp"
#include "ckm/cluster.hpp"
#include "ckm/configlp.hpp"
#include "ckm/instance.hpp"
#include "ckm/lp.hpp"

namespace testutil {

inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------------------
// Vertex-enumeration LP oracle.
//
// For an LP whose variables all have bounds [0, +inf), append one slack
// column per inequality row (+1 for <=, -1 for >=) to get an equality system
// A'w = rhs, w >= 0, then enumerate every choice of m basic columns, solve
// the square system by Gaussian elimination, keep the nonnegative solutions,
// and return the best objective.  Exhaustive over all basis submatrices, so
// it is a ground truth for small problems; quadratic-time per basis.
// ---------------------------------------------------------------------------

struct VertexEnumResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> x;  // original variables of the best vertex
};

namespace detail {

// Solves sq * v = rhs for a dense m x m system; returns false when singular.
inline bool solve_square(std::vector<std::vector<double>> sq,
                         std::vector<double> rhs, std::vector<double>* v) {
  const int m = static_cast<int>(rhs.size());
  for (int c = 0; c < m; ++c) {
    int piv = -1;
    double best = 1e-9;
    for (int r = c; r < m; ++r)
      if (std::abs(sq[r][c]) > best) {
        best = std::abs(sq[r][c]);
        piv = r;
      }
    if (piv < 0) return false;
    std::swap(sq[c], sq[piv]);
    std::swap(rhs[c], rhs[piv]);
    for (int r = c + 1; r < m; ++r) {
      const double f = sq[r][c] / sq[c][c];
      if (f == 0.0) continue;
      for (int cc = c; cc < m; ++cc) sq[r][cc] -= f * sq[c][cc];
      rhs[r] -= f * rhs[c];
    }
  }
  v->assign(m, 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < m; ++c) s -= sq[r][c] * (*v)[c];
    (*v)[r] = s / sq[r][r];
  }
  return true;
}

}  // namespace detail

inline VertexEnumResult vertex_enum_opt(const ckm::LinearProgram& lp) {
  const int n = lp.num_vars;
  const int m = lp.num_rows();
  for (int j = 0; j < n; ++j) {
    if (lp.lo[j] != 0.0 || lp.hi[j] != ckm::kInf)
      throw std::logic_error("vertex_enum_opt: needs [0, inf) variable bounds");
  }
  // Columns: n structural + one slack per inequality row.
  std::vector<int> slack_row;
  for (int r = 0; r < m; ++r)
    if (lp.row_sense[r] != ckm::RowSense::EQ) slack_row.push_back(r);
  const int ncols = n + static_cast<int>(slack_row.size());
  const auto col_entry = [&](int col, int row) -> double {
    if (col < n) return lp.row_coef[row][col];
    const int sr = slack_row[col - n];
    if (sr != row) return 0.0;
    return lp.row_sense[sr] == ckm::RowSense::LE ? 1.0 : -1.0;
  };

  VertexEnumResult best;
  std::vector<int> pick(m);
  // Enumerate all m-subsets of the ncols columns.
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  if (m > ncols) return best;
  while (true) {
    std::vector<std::vector<double>> sq(m, std::vector<double>(m));
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) sq[r][c] = col_entry(idx[c], r);
    std::vector<double> v;
    if (detail::solve_square(sq, lp.row_rhs, &v)) {
      bool ok = true;
      for (int c = 0; c < m && ok; ++c)
        if (v[c] < -1e-9) ok = false;
      if (ok) {
        std::vector<double> x(n, 0.0);
        double obj = 0.0;
        for (int c = 0; c < m; ++c)
          if (idx[c] < n) {
            x[idx[c]] = std::max(v[c], 0.0);
            obj += lp.cost[idx[c]] * v[c];
          }
        if (!best.feasible || obj < best.objective - 1e-12) {
          best.feasible = true;
          best.objective = obj;
          best.x = x;
        }
      }
    }
    // Next combination.
    int p = m - 1;
    while (p >= 0 && idx[p] == ncols - m + p) --p;
    if (p < 0) break;
    ++idx[p];
    for (int q = p + 1; q < m; ++q) idx[q] = idx[q - 1] + 1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exhaustive assignment oracle: cheapest way to give every client exactly one
// facility without exceeding any facility's capacity.  Enumerates all
// nf^nc assignments; exact arithmetic over sums of the given costs.
// ---------------------------------------------------------------------------

inline double brute_min_assignment(const std::vector<std::vector<double>>& cost,
                                   const std::vector<int>& caps) {
  const int nf = static_cast<int>(caps.size());
  const int nc = nf ? static_cast<int>(cost[0].size()) : 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> load(nf, 0);
  const auto rec = [&](auto&& self, int j, double acc) -> void {
    if (acc >= best) return;
    if (j == nc) {
      best = acc;
      return;
    }
    for (int i = 0; i < nf; ++i) {
      if (load[i] == caps[i]) continue;
      ++load[i];
      self(self, j + 1, acc + cost[i][j]);
      --load[i];
    }
  };
  rec(rec, 0, 0.0);
  return best;
}

// ---------------------------------------------------------------------------
// Pipeline fixture: relaxation solution, cost shares, representatives and
// the facility partition for one instance.
// ---------------------------------------------------------------------------

struct Pipeline {
  ckm::FractionalSolution frac;
  ckm::CostShares shares;
  std::vector<int> reps;
  ckm::Clustering cl;
};

inline Pipeline run_pipeline(const ckm::Instance& inst,
                             const std::vector<ckm::Cut>& cuts = {}) {
  Pipeline p;
  p.frac = ckm::solve_basic(inst, cuts);
  p.shares = ckm::cost_shares(inst, p.frac);
  p.reps = ckm::select_representatives(inst, p.shares);
  p.cl = ckm::voronoi_partition(inst, p.reps);
  return p;
}

inline ckm::RandomSpec small_spec(std::uint64_t seed, int nf = 5, int nc = 8,
                                  int k = 3) {
  ckm::RandomSpec spec;
  spec.num_facilities = nf;
  spec.num_clients = nc;
  spec.k = k;
  spec.seed = seed;
  return spec;
}

// ---------------------------------------------------------------------------
// Concentrated-group fixture for the pre-assignment machinery.
//
// Two co-located facilities {0, 1} (capacity 56 each) with 55 fully-inside
// clients and one client whose mass is split 0.375 inside / 0.625 to a far
// third facility.  The hand-made fractional point gives the group opening
// mass 1.5 and split mass pi = 0.375 * 0.625 = 0.234375, concentrated
// against total inside mass 55.375 at ell2 = 225.
//
// The distribution over open sets inside the group is FORCED: writing
// a = z_{both}, the per-facility rows give z_{only i} = 0.75 - a, the
// distribution row gives z_{empty} = a - 0.5, and covering a full client
// needs (0.75-a) + (0.75-a) + a >= 1, so a = 0.5 exactly.  Every candidate
// class the sampler can use is therefore pinned, which makes acceptance
// behavior reproducible regardless of which feasible z the solver returns.
// ---------------------------------------------------------------------------

struct ConcentratedFixture {
  ckm::Instance inst;
  ckm::FractionalSolution frac;
  std::vector<int> B;  // the concentrated facility group {0, 1}
  double pi = 0.0;     // split mass of the group
  double d_b = 0.0;    // connection-cost share of the group's facilities
  int partial_client = 0;  // the one client with mass outside the group
};

inline ConcentratedFixture concentrated_fixture() {
  ConcentratedFixture fx;
  const int nf = 3, nc = 56, full = 55;
  fx.inst.num_facilities = nf;
  fx.inst.num_clients = nc;
  fx.inst.k = 3;
  fx.inst.capacities = {56, 56, 60};
  // Two locations at distance 10: facilities 0,1 and clients 0..54 sit at
  // the first, facility 2 and client 55 at the second.
  const int npts = nf + nc;
  const auto loc = [&](int p) {
    if (p == 2 || p == nf + full) return 1;
    return 0;
  };
  fx.inst.dist.assign(static_cast<std::size_t>(npts) * npts, 0.0);
  for (int a = 0; a < npts; ++a)
    for (int b = 0; b < npts; ++b)
      fx.inst.dist[static_cast<std::size_t>(a) * npts + b] =
          loc(a) == loc(b) ? 0.0 : 10.0;

  fx.frac.x.assign(static_cast<std::size_t>(nf) * nc, 0.0);
  fx.frac.y = {0.75, 0.75, 0.625};
  for (int j = 0; j < full; ++j) {
    fx.frac.x[0 * nc + j] = 0.5;
    fx.frac.x[1 * nc + j] = 0.5;
  }
  fx.partial_client = full;
  fx.frac.x[0 * nc + full] = 0.1875;
  fx.frac.x[1 * nc + full] = 0.1875;
  fx.frac.x[2 * nc + full] = 0.625;
  fx.frac.lp_value = ckm::connection_cost(fx.inst, fx.frac.x);

  fx.B = {0, 1};
  fx.pi = 0.375 * 0.625;
  fx.d_b = 2.0 * (0.1875 * 10.0);  // both group facilities serve the far client
  return fx;
}

}  // namespace testutil
