#pragma once
// Ground-truth engines: a brute-force exact solver (enumerate opened copy
// multisets, match clients optimally per multiset) and a one-shot auditor
// that re-checks every cross-module invariant on a bundle of pipeline
// artifacts.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ckm/basiclp.hpp"
#include "ckm/cluster.hpp"
#include "ckm/configlp.hpp"
#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/grouping.hpp"
#include "ckm/instance.hpp"
#include "ckm/matching.hpp"
#include "ckm/round.hpp"

namespace ckm {

// ---------------------------------------------------------------------------
// Exact solver
// ---------------------------------------------------------------------------

struct ExactResult {
  double opt_cost = 0.0;
  std::vector<int> opt_open;    // copies per facility
  std::vector<int> assignment;  // per client
};

namespace detail {

// Number of copy multisets of size exactly k over n facilities, saturated.
inline double multiset_count(int n, int k) {
  double c = 1.0;
  for (int s = 1; s <= k; ++s) {
    c = c * (n + s - 1) / s;
    if (c > 1e18) return 1e18;
  }
  return c;
}

struct ExactSearch {
  const Instance* inst;
  int k = 0;
  ExactResult best;
  bool found = false;

  void try_multiset(const std::vector<int>& copies) {
    long long cap = 0;
    std::vector<int> opened;
    for (int i = 0; i < inst->num_facilities; ++i)
      if (copies[i] > 0) {
        opened.push_back(i);
        cap += static_cast<long long>(copies[i]) * inst->capacities[i];
      }
    if (cap < inst->num_clients) return;
    std::vector<std::vector<double>> cost(
        opened.size(), std::vector<double>(inst->num_clients));
    std::vector<int> caps(opened.size());
    for (std::size_t a = 0; a < opened.size(); ++a) {
      caps[a] = copies[opened[a]] * inst->capacities[opened[a]];
      for (int j = 0; j < inst->num_clients; ++j)
        cost[a][j] = inst->d_fc(opened[a], j);
    }
    const BMatchResult match = min_cost_b_matching(cost, caps);
    if (!found || match.cost < best.opt_cost) {
      found = true;
      best.opt_cost = match.cost;
      best.opt_open = copies;
      best.assignment.assign(inst->num_clients, -1);
      for (int j = 0; j < inst->num_clients; ++j)
        best.assignment[j] = opened[match.assign[j]];
    }
  }

  // Distribute `left` copies over facilities i..nF-1 (exactly, since unused
  // copies never help).
  void recurse(std::vector<int>& copies, int i, int left) {
    if (i == inst->num_facilities - 1) {
      copies[i] = left;
      try_multiset(copies);
      copies[i] = 0;
      return;
    }
    for (int c = 0; c <= left; ++c) {
      copies[i] = c;
      recurse(copies, i + 1, left - c);
    }
    copies[i] = 0;
  }
};

}  // namespace detail

// Optimal connection cost over all copy multisets of total size k
// (`k_override` > 0 replaces the instance's k).  Deterministic: ties keep
// the first multiset in lexicographic enumeration order.
inline ExactResult exact_opt(const Instance& inst, int k_override = 0) {
  const int k = k_override > 0 ? k_override : inst.k;
  require_input(k >= 1, "exact_opt: need a positive center budget");
  if (detail::multiset_count(inst.num_facilities, k) >
      static_cast<double>(budget::exact_multisets))
    throw resource_error("exact_opt: multiset enumeration beyond the budget");
  detail::ExactSearch search;
  search.inst = &inst;
  search.k = k;
  std::vector<int> copies(inst.num_facilities, 0);
  search.recurse(copies, 0, k);
  require(search.found,
          "exact_opt: no multiset covers the clients — capacity precondition "
          "violated");
  return search.best;
}

namespace detail {

inline void distinct_recurse(ExactSearch& search, std::vector<int>& copies,
                             int i, int left) {
  const int nf = search.inst->num_facilities;
  if (left == 0 || i == nf) {
    search.try_multiset(copies);
    return;
  }
  if (nf - i > left) distinct_recurse(search, copies, i + 1, left);
  copies[i] = 1;
  distinct_recurse(search, copies, i + 1, left - 1);
  copies[i] = 0;
}

}  // namespace detail

// Optimal connection cost when every facility opens at most one copy.  This
// is the integer program the relaxation actually bounds from below: its
// opening variables are capped at one, so duplicate copies are outside the
// relaxation's reach and the multiset optimum of exact_opt can undercut the
// relaxation's value, while this one never does.  Opening more never costs
// anything here, so exactly min(k, nF) facilities are enumerated.
inline ExactResult exact_opt_distinct(const Instance& inst,
                                      int k_override = 0) {
  const int k = k_override > 0 ? k_override : inst.k;
  require_input(k >= 1, "exact_opt_distinct: need a positive center budget");
  detail::ExactSearch search;
  search.inst = &inst;
  search.k = k;
  std::vector<int> copies(inst.num_facilities, 0);
  detail::distinct_recurse(search, copies, 0, std::min(k, inst.num_facilities));
  require(search.found,
          "exact_opt_distinct: no subset covers the clients — capacity "
          "precondition violated");
  return search.best;
}

namespace detail {

// Independent cross-check: assign clients one by one, tracking per-facility
// loads; a facility with load c requires ceil(c/u) copies, and total copies
// must stay within k.  Branch-and-bound on the running cost.
inline void naive_recurse(const Instance& inst, int k, int j,
                          std::vector<int>& load, int copies_used,
                          double cost_so_far, double* best) {
  if (cost_so_far >= *best) return;
  if (j == inst.num_clients) {
    *best = cost_so_far;
    return;
  }
  for (int i = 0; i < inst.num_facilities; ++i) {
    const int before = (load[i] + inst.capacities[i] - 1) / inst.capacities[i];
    ++load[i];
    const int after = (load[i] + inst.capacities[i] - 1) / inst.capacities[i];
    const int used = copies_used + (after - before);
    if (used <= k)
      naive_recurse(inst, k, j + 1, load, used,
                    cost_so_far + inst.d_fc(i, j), best);
    --load[i];
  }
}

}  // namespace detail

inline double naive_opt(const Instance& inst, int k_override = 0) {
  const int k = k_override > 0 ? k_override : inst.k;
  std::vector<int> load(inst.num_facilities, 0);
  double best = kInf;
  detail::naive_recurse(inst, k, 0, load, 0, 0.0, &best);
  require(best < kInf, "naive_opt: no assignment fits the center budget");
  return best;
}

// ---------------------------------------------------------------------------
// Invariant auditor
// ---------------------------------------------------------------------------

struct AuditReport {
  int checks_run = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Re-checks every cross-module invariant on the given artifacts: relaxation
// feasibility, cost-share identities, clustering properties and cost bounds,
// the isolation bound swept over all proper rep subsets (when |R| <= 8), the
// grouping chain (when ell >= 1), optional transport-vertex records, and an
// optional integral solution.
inline AuditReport audit(const Instance& inst, const FractionalSolution& frac,
                         const CostShares& shares, const Clustering& cl,
                         int ell = 0, const IntegralSolution* sol = nullptr,
                         const std::vector<MoveRecord>* moves = nullptr) {
  AuditReport rep;
  const auto fail = [&](const std::string& msg) { rep.failures.push_back(msg); };
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-7 * std::max({1.0, std::abs(a), std::abs(b)});
  };

  ++rep.checks_run;
  const double viol = basic_violation(inst, frac.x, frac.y);
  if (viol > 10 * tol::feas)
    fail("relaxation constraint violated by " + format_real(viol));

  ++rep.checks_run;
  if (!close(connection_cost(inst, frac.x), frac.lp_value))
    fail("stored relaxation value disagrees with the assignment cost");

  ++rep.checks_run;  // cost-share identities
  {
    double dsum = 0.0, dpsum = 0.0, dav_sum = 0.0;
    for (int j = 0; j < inst.num_clients; ++j) {
      double dav = 0.0;
      for (int i = 0; i < inst.num_facilities; ++i)
        dav += frac.x[detail::xvar(inst, i, j)] * inst.d_fc(i, j);
      if (!close(dav, shares.d_av[j])) {
        fail("per-client cost share mismatch at client " + std::to_string(j));
        break;
      }
      dav_sum += dav;
    }
    for (int i = 0; i < inst.num_facilities; ++i) {
      dsum += shares.D[i];
      dpsum += shares.Dprime[i];
    }
    if (!close(dsum, frac.lp_value) || !close(dpsum, frac.lp_value) ||
        !close(dav_sum, frac.lp_value))
      fail("cost shares do not add up to the relaxation value");
  }

  ++rep.checks_run;
  {
    const ClusterPropertyReport cp =
        check_cluster_properties(inst, frac, shares, cl);
    if (!cp.ok())
      for (const std::string& w : cp.witnesses) fail("clustering: " + w);
  }

  ++rep.checks_run;
  {
    const ClusterCostBounds cb = check_cluster_cost_bounds(inst, frac, shares, cl);
    if (!cb.ok()) fail("clustering cost bound violated");
  }

  const std::size_t nr = cl.reps.size();
  if (nr >= 2 && nr <= 8) {
    ++rep.checks_run;
    for (std::uint32_t mask = 1; mask + 1 < (1u << nr); ++mask) {
      std::vector<int> J;
      for (std::size_t p = 0; p < nr; ++p)
        if (mask & (1u << p)) J.push_back(static_cast<int>(p));
      const IsolationBound b = check_isolation_bound(inst, frac, shares, cl, J);
      if (!b.ok) {
        fail("isolation bound violated for a rep subset of size " +
             std::to_string(J.size()) + ": " + format_real(b.lhs) + " > " +
             format_real(b.rhs));
        break;
      }
    }
  }

  if (ell >= 1) {
    ++rep.checks_run;
    try {
      const ColoredMst mst = build_colored_mst(inst, cl, frac, ell);
      const ContractedForest forest = contract(inst, cl, mst, ell);
      const GroupDecomposition gd = decompose(forest, ell);
      std::vector<char> seen(nr, 0);
      for (const Group& g : gd.groups)
        for (int pos : g.reps) {
          if (seen[pos]) fail("grouping: representative appears twice");
          seen[pos] = 1;
        }
      for (std::size_t p = 0; p < nr; ++p)
        if (!seen[p]) fail("grouping: representative missing from all groups");
    } catch (const std::exception& e) {
      fail(std::string("grouping chain: ") + e.what());
    }
  }

  if (moves) {
    ++rep.checks_run;
    for (const MoveRecord& m : *moves)
      if (m.frac_count > 2)
        fail("transport vertex with " + std::to_string(m.frac_count) +
             " fractional values");
  }

  if (sol) {
    ++rep.checks_run;
    const std::string defect = verify_solution(inst, *sol);
    if (!defect.empty()) fail("solution: " + defect);
  }
  return rep;
}

}  // namespace ckm
