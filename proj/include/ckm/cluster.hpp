#pragma once
// Greedy selection of client representatives and the Voronoi partition of
// facilities around them, plus executable checks of the structural
// properties the later stages rely on.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "ckm/basiclp.hpp"
#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/instance.hpp"

namespace ckm {

// A clustering of facilities around representative clients.
//   reps:  representative client ids in selection order
//   U:     U[p] = facility ids owned by reps[p] (ascending)
//   owner: owner[i] = position p into reps of facility i's representative
struct Clustering {
  std::vector<int> reps;
  std::vector<std::vector<int>> U;
  std::vector<int> owner;
};

// Greedy representative selection: repeatedly pick the remaining client with
// the smallest average service distance (ties by lowest client index) and
// discard every remaining client j with d(j, v) <= 4 * d_av(j).
inline std::vector<int> select_representatives(const Instance& inst,
                                               const CostShares& shares) {
  const int nc = inst.num_clients;
  require(shares.d_av.size() == static_cast<std::size_t>(nc),
          "select_representatives: d_av size");
  std::vector<char> alive(nc, 1);
  std::vector<int> reps;
  int remaining = nc;
  while (remaining > 0) {
    int v = -1;
    for (int j = 0; j < nc; ++j) {
      if (!alive[j]) continue;
      if (v == -1 || shares.d_av[j] < shares.d_av[v]) v = j;
    }
    reps.push_back(v);
    for (int j = 0; j < nc; ++j) {
      if (!alive[j]) continue;
      if (inst.d_cc(j, v) <= 4.0 * shares.d_av[j]) {
        alive[j] = 0;
        --remaining;
      }
    }
    require(!alive[v], "select_representatives: pick did not remove itself");
  }
  return reps;
}

// Assigns every facility to its nearest representative; ties go to the
// representative selected earlier.
inline Clustering voronoi_partition(const Instance& inst,
                                    const std::vector<int>& reps) {
  require(!reps.empty(), "voronoi_partition: empty representative list");
  const int nf = inst.num_facilities;
  Clustering cl;
  cl.reps = reps;
  cl.U.assign(reps.size(), {});
  cl.owner.assign(nf, -1);
  for (int i = 0; i < nf; ++i) {
    int best = 0;
    for (std::size_t p = 1; p < reps.size(); ++p)
      if (inst.d_fc(i, reps[p]) < inst.d_fc(i, reps[best])) best = static_cast<int>(p);
    cl.owner[i] = best;
    cl.U[best].push_back(i);
  }
  return cl;
}

// Total opening mass of the cluster at position p.
inline double cluster_weight(const Clustering& cl, const std::vector<double>& y,
                             std::size_t p) {
  double w = 0.0;
  for (int i : cl.U[p]) w += y[i];
  return w;
}

// Total assignment mass routed through facility i (sum over clients).
inline double facility_mass(const Instance& inst, const std::vector<double>& x,
                            int i) {
  double m = 0.0;
  for (int j = 0; j < inst.num_clients; ++j)
    m += x[detail::xvar(inst, i, j)];
  return m;
}

// Pass/fail report for the four structural properties of a clustering:
//   separation:   representatives are pairwise farther apart than 4 times
//                 the larger of their average distances (exact arithmetic).
//   covering:     every client j has a representative v with
//                 d_av(v) <= d_av(j) and d(v, j) <= 4 d_av(j) (exact).
//   weight:       every cluster has opening mass >= 1/2 (tolerance slack).
//   reachability: d(i, v) <= d(i, j) + 4 d_av(j) for every representative v,
//                 facility i in its cluster, and client j (tolerance slack).
struct ClusterPropertyReport {
  bool separation_ok = true;
  bool covering_ok = true;
  bool weight_ok = true;
  bool reachability_ok = true;
  std::vector<std::string> witnesses;  // one line per failure, capped
  bool ok() const {
    return separation_ok && covering_ok && weight_ok && reachability_ok;
  }
};

inline ClusterPropertyReport check_cluster_properties(
    const Instance& inst, const FractionalSolution& frac,
    const CostShares& shares, const Clustering& cl) {
  ClusterPropertyReport rep;
  const auto note = [&](std::string line) {
    if (rep.witnesses.size() < 64) rep.witnesses.push_back(std::move(line));
  };
  const std::size_t nr = cl.reps.size();

  // separation
  for (std::size_t p = 0; p < nr; ++p) {
    for (std::size_t q = p + 1; q < nr; ++q) {
      const int v1 = cl.reps[p], v2 = cl.reps[q];
      const double bound =
          4.0 * std::max(shares.d_av[v1], shares.d_av[v2]);
      if (!(inst.d_cc(v1, v2) > bound)) {
        rep.separation_ok = false;
        note("separation: reps " + std::to_string(v1) + "," +
             std::to_string(v2) + " at distance " +
             format_real(inst.d_cc(v1, v2)) + " <= " + format_real(bound));
      }
    }
  }

  // covering
  for (int j = 0; j < inst.num_clients; ++j) {
    bool covered = false;
    for (int v : cl.reps) {
      if (shares.d_av[v] <= shares.d_av[j] &&
          inst.d_cc(v, j) <= 4.0 * shares.d_av[j]) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      rep.covering_ok = false;
      note("covering: client " + std::to_string(j) +
           " has no representative within 4*d_av");
    }
  }

  // weight
  for (std::size_t p = 0; p < nr; ++p) {
    const double w = cluster_weight(cl, frac.y, p);
    if (w < 0.5 - tol::feas) {
      rep.weight_ok = false;
      note("weight: cluster of rep " + std::to_string(cl.reps[p]) +
           " has mass " + format_real(w) + " < 1/2");
    }
  }

  // reachability
  for (std::size_t p = 0; p < nr; ++p) {
    const int v = cl.reps[p];
    for (int i : cl.U[p]) {
      for (int j = 0; j < inst.num_clients; ++j) {
        const double lhs = inst.d_fc(i, v);
        const double rhs = inst.d_fc(i, j) + 4.0 * shares.d_av[j];
        if (lhs > rhs + tol::feas * std::max(1.0, rhs)) {
          rep.reachability_ok = false;
          note("reachability: d(" + std::to_string(i) + ", rep " +
               std::to_string(v) + ") = " + format_real(lhs) + " > " +
               format_real(rhs));
        }
      }
    }
  }
  return rep;
}

// Per-cluster service-cost bound: the mass through each cluster, moved to its
// representative, costs at most D(U_v) + 4 D'(U_v); summed over clusters this
// is at most 5 times the LP value.
struct ClusterCostBounds {
  std::vector<double> lhs;    // per cluster: sum_{i in U_v} x_{i,C} d(i,v)
  std::vector<double> rhs;    // per cluster: D(U_v) + 4 D'(U_v)
  double total_lhs = 0.0;
  double five_lp = 0.0;
  bool per_cluster_ok = true;
  bool total_ok = true;
  bool ok() const { return per_cluster_ok && total_ok; }
};

inline ClusterCostBounds check_cluster_cost_bounds(const Instance& inst,
                                                   const FractionalSolution& frac,
                                                   const CostShares& shares,
                                                   const Clustering& cl) {
  ClusterCostBounds b;
  const std::size_t nr = cl.reps.size();
  b.lhs.assign(nr, 0.0);
  b.rhs.assign(nr, 0.0);
  for (std::size_t p = 0; p < nr; ++p) {
    const int v = cl.reps[p];
    for (int i : cl.U[p]) {
      b.lhs[p] += facility_mass(inst, frac.x, i) * inst.d_fc(i, v);
      b.rhs[p] += shares.D[i] + 4.0 * shares.Dprime[i];
    }
    b.total_lhs += b.lhs[p];
    if (b.lhs[p] > b.rhs[p] + tol::feas * std::max(1.0, b.rhs[p]))
      b.per_cluster_ok = false;
  }
  b.five_lp = 5.0 * frac.lp_value;
  if (b.total_lhs > b.five_lp + tol::feas * std::max(1.0, b.five_lp))
    b.total_ok = false;
  return b;
}

}  // namespace ckm
