#pragma once
// The two rounding algorithms, the per-group demand LP, final assignment,
// cost accounting, and the cutting-plane driver.
//
// Baseline rounding: per cluster, a small transport LP decides how much
// demand each facility absorbs; a vertex solution keeps the open count near
// the cluster's fractional mass.  Guarantees <= 4k openings and cost
// <= 11 * relaxation value.
//
// Configuration rounding: groups clusters along a colored spanning forest,
// pre-opens facilities inside concentrated groups from a feasibility system
// over candidate open sets, moves leftover demand group by group, and either
// produces a solution with <= floor((1+5/l)k) openings or reports a facility
// set whose system is infeasible together with a separating inequality.

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ckm/basiclp.hpp"
#include "ckm/cluster.hpp"
#include "ckm/configlp.hpp"
#include "ckm/constants.hpp"
#include "ckm/dependent.hpp"
#include "ckm/errors.hpp"
#include "ckm/grouping.hpp"
#include "ckm/instance.hpp"
#include "ckm/lp.hpp"
#include "ckm/matching.hpp"

namespace ckm {

// ---------------------------------------------------------------------------
// Integral solutions
// ---------------------------------------------------------------------------

struct IntegralSolution {
  std::vector<int> open_copies;  // per facility: 0, 1 or 2
  std::vector<int> assignment;   // per client: serving facility
  double cost = 0.0;             // sum of d(facility, client) over clients
  int opened_total = 0;          // sum of copy counts
};

// Empty string when the solution is well-formed for the instance; otherwise
// a description of the first defect.  Capacity is an exact integer check.
inline std::string verify_solution(const Instance& inst,
                                   const IntegralSolution& sol) {
  if (static_cast<int>(sol.open_copies.size()) != inst.num_facilities)
    return "open-copy vector has the wrong length";
  if (static_cast<int>(sol.assignment.size()) != inst.num_clients)
    return "assignment vector has the wrong length";
  int copies = 0;
  for (int i = 0; i < inst.num_facilities; ++i) {
    if (sol.open_copies[i] < 0 || sol.open_copies[i] > 2)
      return "facility " + std::to_string(i) + " has copy count " +
             std::to_string(sol.open_copies[i]) + " outside {0, 1, 2}";
    copies += sol.open_copies[i];
  }
  if (copies != sol.opened_total) return "opened_total does not match copies";
  std::vector<int> load(inst.num_facilities, 0);
  double cost = 0.0;
  for (int j = 0; j < inst.num_clients; ++j) {
    const int i = sol.assignment[j];
    if (i < 0 || i >= inst.num_facilities)
      return "client " + std::to_string(j) + " is not assigned";
    if (sol.open_copies[i] == 0)
      return "client " + std::to_string(j) + " assigned to closed facility " +
             std::to_string(i);
    ++load[i];
    cost += inst.d_fc(i, j);
  }
  for (int i = 0; i < inst.num_facilities; ++i)
    if (load[i] > sol.open_copies[i] * inst.capacities[i])
      return "facility " + std::to_string(i) + " serves " +
             std::to_string(load[i]) + " clients with capacity " +
             std::to_string(sol.open_copies[i] * inst.capacities[i]);
  if (std::abs(cost - sol.cost) > tol::feas * std::max(1.0, std::abs(cost)))
    return "stored cost does not match the assignment";
  return "";
}

// Solution text format.
inline void write_solution(std::ostream& os, const Instance& inst,
                           const IntegralSolution& sol) {
  os << "ckm-sol v1\n";
  os << "cost " << format_real(sol.cost) << " opened " << sol.opened_total
     << " k " << inst.k << "\n";
  for (int i = 0; i < inst.num_facilities; ++i)
    if (sol.open_copies[i] > 0)
      os << "open " << i << " " << sol.open_copies[i] << "\n";
  for (int j = 0; j < inst.num_clients; ++j)
    os << "assign " << j << " " << sol.assignment[j] << "\n";
}

inline IntegralSolution parse_solution(std::istream& is,
                                       const Instance& inst) {
  IntegralSolution sol;
  sol.open_copies.assign(inst.num_facilities, 0);
  sol.assignment.assign(inst.num_clients, -1);
  std::string line;
  if (!std::getline(is, line) || line != "ckm-sol v1")
    throw input_error("solution file: missing 'ckm-sol v1' header");
  if (!std::getline(is, line))
    throw input_error("solution file: missing summary line");
  {
    std::istringstream ss(line);
    std::string w1, w2, w3;
    int k = 0;
    if (!(ss >> w1 >> sol.cost >> w2 >> sol.opened_total >> w3 >> k) ||
        w1 != "cost" || w2 != "opened" || w3 != "k")
      throw input_error("solution file: malformed summary line");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "open") {
      int i = -1, c = 0;
      if (!(ss >> i >> c) || i < 0 || i >= inst.num_facilities)
        throw input_error("solution file: malformed open line");
      sol.open_copies[i] = c;
    } else if (kind == "assign") {
      int j = -1, i = -1;
      if (!(ss >> j >> i) || j < 0 || j >= inst.num_clients)
        throw input_error("solution file: malformed assign line");
      sol.assignment[j] = i;
    } else {
      throw input_error("solution file: unknown line kind '" + kind + "'");
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RoundReport {
  int opened_total = 0;
  double cost = 0.0;
  double lp_value = 0.0;
  double ratio = 0.0;              // cost / lp_value
  double cardinality_slack = 0.0;  // opened_total / k
  int cuts_emitted = 0;
  // Moving-cost breakdown; the stages sum to an upper bound on the final
  // matched cost (the matching is optimal, the moving scheme is one feasible
  // transport).
  double preassign_cost = 0.0;
  double client_move_cost = 0.0;
  double group_move_cost = 0.0;
};

inline double report_breakdown_total(const RoundReport& r) {
  return r.preassign_cost + r.client_move_cost + r.group_move_cost;
}

inline void write_report(std::ostream& os, const RoundReport& r) {
  os << "opened_total " << r.opened_total << "\n";
  os << "cost " << format_real(r.cost) << "\n";
  os << "lp_value " << format_real(r.lp_value) << "\n";
  os << "ratio " << format_real(r.ratio) << "\n";
  os << "cardinality_slack " << format_real(r.cardinality_slack) << "\n";
  os << "cuts_emitted " << r.cuts_emitted << "\n";
  os << "preassign_cost " << format_real(r.preassign_cost) << "\n";
  os << "client_move_cost " << format_real(r.client_move_cost) << "\n";
  os << "group_move_cost " << format_real(r.group_move_cost) << "\n";
  os << "breakdown_total " << format_real(report_breakdown_total(r)) << "\n";
}

// ---------------------------------------------------------------------------
// Demand transport LP
// ---------------------------------------------------------------------------

// Vertex solution of: minimize sum_i alpha_i * dists[i] subject to
// alpha_i in [0, caps[i]], sum_i alpha_i = demand, and
// sum_i alpha_i / caps[i] + t <= budget.
struct MoveResult {
  std::vector<double> alpha;
  double objective = 0.0;
};

// Count of transport values strictly between the bounds; a vertex has at
// most two.
inline int fractional_count(const std::vector<double>& alpha,
                            const std::vector<int>& caps) {
  int n = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (alpha[i] > tol::feas && alpha[i] < caps[i] - tol::feas) ++n;
  return n;
}

// `witness`, when given, must satisfy the constraints — violation is a hard
// internal error — and its objective must dominate the optimum.
inline MoveResult move_lp_group(const std::vector<int>& caps,
                                const std::vector<double>& dists,
                                double demand, int t, double budget,
                                const std::vector<double>* witness = nullptr) {
  const int n = static_cast<int>(caps.size());
  require(static_cast<int>(dists.size()) == n, "move_lp_group: size mismatch");
  require(demand >= -tol::feas, "move_lp_group: negative demand");
  demand = std::max(demand, 0.0);

  double witness_obj = 0.0;
  if (witness) {
    require(static_cast<int>(witness->size()) == n,
            "move_lp_group: witness size mismatch");
    double total = 0.0, slots = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = (*witness)[i];
      require(a >= -tol::feas && a <= caps[i] + tol::feas,
              "move_lp_group: witness transport outside its bounds");
      total += a;
      slots += a / caps[i];
      witness_obj += a * dists[i];
    }
    require(std::abs(total - demand) <= tol::feas * std::max(1.0, demand),
            "move_lp_group: witness does not carry the demand");
    require(slots + t <= budget + tol::feas * std::max(1.0, std::abs(budget)),
            "move_lp_group: witness exceeds the opening budget");
  }

  MoveResult res;
  res.alpha.assign(n, 0.0);
  if (demand <= 0.0) return res;

  LinearProgram lp;
  for (int i = 0; i < n; ++i) lp.add_var(dists[i], 0.0, caps[i]);
  std::vector<double> row(n, 1.0);
  lp.add_row(row, RowSense::EQ, demand);
  for (int i = 0; i < n; ++i) row[i] = 1.0 / caps[i];
  lp.add_row(row, RowSense::LE, budget - t);
  const LpSolution out = solve_lp(lp);
  require(out.status == LpStatus::Optimal,
          "move_lp_group: transport program unsolvable despite a feasible "
          "witness");
  res.alpha = out.x;
  for (int i = 0; i < n; ++i)
    res.alpha[i] = std::clamp(res.alpha[i], 0.0, static_cast<double>(caps[i]));
  res.objective = 0.0;
  for (int i = 0; i < n; ++i) res.objective += res.alpha[i] * dists[i];
  if (witness)
    require(res.objective <=
                witness_obj + tol::feas * std::max(1.0, std::abs(witness_obj)),
            "move_lp_group: optimum exceeds the witness objective");
  return res;
}

// Record of one transport LP, kept for auditing.
struct MoveRecord {
  double demand = 0.0;
  int t = 0;
  double budget = 0.0;
  double objective = 0.0;
  int frac_count = 0;
  int opened = 0;
};

// ---------------------------------------------------------------------------
// Final assignment
// ---------------------------------------------------------------------------

// Min-cost completion: clients without a fixed assignment are matched to the
// residual opened capacity.  `fixed[j] = -1` marks an unfixed client.
inline void final_assignment(const Instance& inst,
                             const std::vector<int>& open_copies,
                             const std::vector<int>& fixed,
                             IntegralSolution* sol) {
  const int nf = inst.num_facilities, nc = inst.num_clients;
  require(static_cast<int>(open_copies.size()) == nf &&
              static_cast<int>(fixed.size()) == nc,
          "final_assignment: size mismatch");
  sol->open_copies = open_copies;
  sol->assignment = fixed;

  std::vector<int> residual(nf, 0);
  for (int i = 0; i < nf; ++i)
    residual[i] = open_copies[i] * inst.capacities[i];
  std::vector<int> loose;
  for (int j = 0; j < nc; ++j) {
    if (fixed[j] < 0) {
      loose.push_back(j);
      continue;
    }
    require(open_copies[fixed[j]] > 0,
            "final_assignment: client fixed to a closed facility");
    require(--residual[fixed[j]] >= 0,
            "final_assignment: fixed load exceeds capacity");
  }

  if (!loose.empty()) {
    std::vector<int> cols;  // facilities with residual capacity
    long long avail = 0;
    for (int i = 0; i < nf; ++i)
      if (open_copies[i] > 0 && residual[i] > 0) {
        cols.push_back(i);
        avail += residual[i];
      }
    require(avail >= static_cast<long long>(loose.size()),
            "final_assignment: opened capacity cannot cover the remaining "
            "clients");
    std::vector<std::vector<double>> cost(
        cols.size(), std::vector<double>(loose.size(), 0.0));
    std::vector<int> caps(cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a) {
      caps[a] = residual[cols[a]];
      for (std::size_t b = 0; b < loose.size(); ++b)
        cost[a][b] = inst.d_fc(cols[a], loose[b]);
    }
    const BMatchResult match = min_cost_b_matching(cost, caps);
    for (std::size_t b = 0; b < loose.size(); ++b) {
      require(match.assign[b] >= 0, "final_assignment: client left unmatched");
      sol->assignment[loose[b]] = cols[match.assign[b]];
    }
  }

  sol->cost = 0.0;
  for (int j = 0; j < nc; ++j)
    sol->cost += inst.d_fc(sol->assignment[j], j);
  sol->opened_total = 0;
  for (int i = 0; i < nf; ++i) sol->opened_total += open_copies[i];
  const std::string defect = verify_solution(inst, *sol);
  require(defect.empty(), "final_assignment: " + defect);
}

// ---------------------------------------------------------------------------
// Baseline rounding
// ---------------------------------------------------------------------------

inline IntegralSolution round_basic(const Instance& inst,
                                    const FractionalSolution& frac,
                                    [[maybe_unused]] const CostShares& shares,
                                    const Clustering& cl,
                                    RoundReport* report = nullptr,
                                    std::vector<MoveRecord>* records = nullptr) {
  const int nf = inst.num_facilities;
  std::vector<int> copies(nf, 0);
  double cluster_move = 0.0, alpha_move = 0.0;

  for (std::size_t p = 0; p < cl.reps.size(); ++p) {
    const std::vector<int>& U = cl.U[p];
    const int v = cl.reps[p];
    const double weight = cluster_weight(cl, frac.y, static_cast<int>(p));
    require(weight >= 0.5 - tol::feas,
            "round_basic: cluster weight below one half");
    std::vector<int> caps(U.size());
    std::vector<double> dists(U.size()), witness(U.size());
    double demand = 0.0;
    for (std::size_t a = 0; a < U.size(); ++a) {
      caps[a] = inst.capacities[U[a]];
      dists[a] = inst.d_fc(U[a], v);
      witness[a] = facility_mass(inst, frac.x, U[a]);
      demand += witness[a];
      cluster_move += witness[a] * dists[a];
    }
    const MoveResult mv =
        move_lp_group(caps, dists, demand, 0, weight, &witness);
    int opened_here = 0;
    for (std::size_t a = 0; a < U.size(); ++a)
      if (mv.alpha[a] > tol::feas) {
        copies[U[a]] = 1;  // alpha <= capacity, so one copy suffices
        ++opened_here;
      }
    const int fc = fractional_count(mv.alpha, caps);
    require(fc <= 2, "round_basic: transport vertex has " +
                         std::to_string(fc) + " fractional values");
    require(opened_here <=
                static_cast<int>(std::floor(weight + tol::feas)) + 2,
            "round_basic: cluster opens beyond its fractional mass plus two");
    alpha_move += mv.objective;
    if (records)
      records->push_back(
          {demand, 0, weight, mv.objective, fc, opened_here});
  }

  IntegralSolution sol;
  final_assignment(inst, copies, std::vector<int>(inst.num_clients, -1), &sol);
  require(sol.opened_total <= 4 * inst.k,
          "round_basic: opened more than four times the center budget");
  const double bound = frac.lp_value + cluster_move + alpha_move;
  require(sol.cost <= bound + tol::feas * std::max(1.0, bound),
          "round_basic: matched cost exceeds the moving-cost bound");
  require(sol.cost <=
              11.0 * frac.lp_value + tol::feas * std::max(1.0, frac.lp_value),
          "round_basic: cost exceeds eleven times the relaxation value");
  if (report) {
    report->opened_total = sol.opened_total;
    report->cost = sol.cost;
    report->lp_value = frac.lp_value;
    report->ratio = sol.cost / frac.lp_value;
    report->cardinality_slack =
        static_cast<double>(sol.opened_total) / inst.k;
    report->cuts_emitted = 0;
    report->preassign_cost = 0.0;
    report->client_move_cost = frac.lp_value;
    report->group_move_cost = cluster_move + alpha_move;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Configuration rounding
// ---------------------------------------------------------------------------

struct ConfigRoundOutcome {
  bool success = false;
  IntegralSolution sol;           // success only
  std::vector<int> violated_set;  // failure only: facility ids
  Cut cut;                        // failure only: separating inequality
  double cut_violation = 0.0;
  // Accounting (success path).
  double preassign_cost = 0.0;
  double client_move_cost = 0.0;
  double group_move_cost = 0.0;
  int preassigned_count = 0;
  int concentrated_nodes = 0;
  int preassign_attempts = 0;
  std::vector<MoveRecord> moves;
};

inline ConfigRoundOutcome round_config(const Instance& inst,
                                       const FractionalSolution& frac,
                                       const CostShares& shares,
                                       const Clustering& cl, double epsilon,
                                       std::mt19937_64& rng,
                                       int max_retries = 200) {
  const GuaranteeParams gp = GuaranteeParams::from_epsilon(epsilon);
  const ColoredMst mst = build_colored_mst(inst, cl, frac, gp.ell);
  const ContractedForest forest = contract(inst, cl, mst, gp.ell);
  const GroupDecomposition gd = decompose(forest, gp.ell);
  ConfigRoundOutcome out;

  // Pre-open facilities and pre-assign clients, node by node in id order.
  const int nf = inst.num_facilities, nc = inst.num_clients;
  std::vector<int> pre_copy(nf, 0), preassigned(nc, -1);
  std::vector<char> ever_assigned(nc, 0);
  for (std::size_t p = 0; p < forest.nodes.size(); ++p) {
    const ForestNode& node = forest.nodes[p];
    const bool eligible = !node.root || node.weight <= 2.0 * gp.ell;
    if (!eligible) continue;
    if (!is_concentrated(inst, frac, cl, node.members, gp.ell2)) continue;
    ++out.concentrated_nodes;
    const std::vector<int> B = facilities_of(cl, node.members);
    const ConfigSystem sys = build_config_system(inst, frac, B, gp.ell1);
    const ConfigOutcome feas = check_feasible(sys);
    if (!feas.feasible) {
      out.success = false;
      out.violated_set = B;
      out.cut = feas.cut;
      out.cut_violation = feas.cut_violation;
      return out;
    }
    double d_b = 0.0;
    for (int i : B) d_b += shares.D[i];
    const double pi_j = pi_value(inst, frac, cl, node.members);
    const PreassignResult pr = preassign(inst, sys, feas.z, pi_j, d_b, gp,
                                         rng, max_retries);
    out.preassign_attempts += pr.attempts;
    if (!pr.ok) {
      std::string ids;
      for (int i : B) ids += (ids.empty() ? "" : ",") + std::to_string(i);
      throw algorithm_failure("pre-assignment failed for facility group {" +
                              ids + "}: " + pr.reason);
    }
    for (int i : pr.pa.open_set) pre_copy[i] = 1;
    for (auto [j, i] : pr.pa.assigned) {
      ever_assigned[j] = 1;
      if (preassigned[j] == -1) preassigned[j] = i;  // keep the first
    }
    out.preassign_cost += pr.pa.cost;
  }

  // Leftover demand: clients never pre-assigned anywhere.
  std::vector<char> in_ctilde(nc, 0);
  for (int j = 0; j < nc; ++j) {
    if (ever_assigned[j]) {
      ++out.preassigned_count;
    } else {
      in_ctilde[j] = 1;
      out.client_move_cost += shares.d_av[j];
    }
  }

  const auto mass_toward = [&](int i) {  // x_{i, C~}
    double s = 0.0;
    for (int j = 0; j < nc; ++j)
      if (in_ctilde[j]) s += frac.x[detail::xvar(inst, i, j)];
    return s;
  };

  // Transport demand group by group.
  std::vector<int> move_copy(nf, 0);
  for (const Group& g : gd.groups) {
    const int anchor_node =
        g.is_root_group ? gd.trees[g.tree_index].root_node
                        : gd.trees[g.tree_index]
                              .subtrees[g.subtree_index]
                              .root_node;
    int vstar = inst.num_clients;
    for (int pos : forest.nodes[anchor_node].members)
      vstar = std::min(vstar, cl.reps[pos]);

    std::vector<int> U;
    std::vector<double> witness;
    double demand = 0.0, weight = 0.0;
    int t = 0;
    for (int pos : g.reps) weight += cluster_weight(cl, frac.y, pos);
    // The witness scales each facility's total mass by its own node's share
    // of leftover demand, so gather the group's facilities node by node.
    std::vector<int> group_nodes;
    for (int pos : g.reps) group_nodes.push_back(forest.node_of[pos]);
    std::sort(group_nodes.begin(), group_nodes.end());
    group_nodes.erase(std::unique(group_nodes.begin(), group_nodes.end()),
                      group_nodes.end());
    for (int node : group_nodes) {
      std::vector<int> nodeU;
      for (int pos : forest.nodes[node].members)
        nodeU.insert(nodeU.end(), cl.U[pos].begin(), cl.U[pos].end());
      double node_ctilde = 0.0, node_all = 0.0;
      for (int i : nodeU) {
        node_ctilde += mass_toward(i);
        node_all += facility_mass(inst, frac.x, i);
      }
      const double scale = node_all > 0.0 ? node_ctilde / node_all : 0.0;
      for (int i : nodeU) {
        U.push_back(i);
        witness.push_back(scale * facility_mass(inst, frac.x, i));
        demand += mass_toward(i);
        if (pre_copy[i]) ++t;
      }
    }

    const double budget = (1.0 + 1.0 / gp.ell) * weight;
    std::vector<int> caps(U.size());
    std::vector<double> dists(U.size());
    for (std::size_t a = 0; a < U.size(); ++a) {
      caps[a] = inst.capacities[U[a]];
      dists[a] = inst.d_fc(U[a], vstar);
    }
    const MoveResult mv =
        move_lp_group(caps, dists, demand, t, budget, &witness);
    int opened_here = 0;
    double inbound = 0.0;
    for (std::size_t a = 0; a < U.size(); ++a) {
      inbound += mass_toward(U[a]) * dists[a];
      if (mv.alpha[a] > tol::feas) {
        move_copy[U[a]] = 1;
        ++opened_here;
      }
    }
    const int fc = fractional_count(mv.alpha, caps);
    require(fc <= 2, "round_config: transport vertex has " +
                         std::to_string(fc) + " fractional values");
    out.group_move_cost += inbound + mv.objective;
    out.moves.push_back({demand, t, budget, mv.objective, fc, opened_here});
  }

  // Assemble copies; a pre-opened facility re-opened by the transport keeps
  // both copies.
  std::vector<int> copies(nf, 0);
  for (int i = 0; i < nf; ++i) {
    copies[i] = pre_copy[i] + move_copy[i];
    require(copies[i] <= 2, "round_config: copy count above two");
  }

  // Per-tree accounting: openings inside each tree stay within the tree's
  // fractional mass plus two per transport program.
  for (std::size_t ti = 0; ti < gd.trees.size(); ++ti) {
    std::vector<char> in_tree(forest.nodes.size(), 0);
    for (std::size_t p = 0; p < forest.nodes.size(); ++p) {
      int cursor = static_cast<int>(p);
      while (forest.nodes[cursor].parent >= 0)
        cursor = forest.nodes[cursor].parent;
      if (cursor == gd.trees[ti].root_node) in_tree[p] = 1;
    }
    double tree_weight = 0.0;
    int tree_open = 0;
    for (std::size_t p = 0; p < forest.nodes.size(); ++p) {
      if (!in_tree[p]) continue;
      for (int pos : forest.nodes[p].members) {
        tree_weight += cluster_weight(cl, frac.y, pos);
        for (int i : cl.U[pos]) tree_open += copies[i];
      }
    }
    const double cap = (1.0 + 1.0 / gp.ell) * tree_weight +
                       2.0 * (gd.trees[ti].subtrees.size() + 1.0);
    require(tree_open <= cap + tol::feas * std::max(1.0, cap),
            "round_config: tree opens beyond its accounted budget");
  }

  final_assignment(inst, copies, preassigned, &out.sol);
  out.success = true;

  const double card_cap =
      std::floor((1.0 + 5.0 / gp.ell) * inst.k + tol::feas);
  require(out.sol.opened_total <= card_cap,
          "round_config: opened beyond the cardinality guarantee");
  const double breakdown =
      out.preassign_cost + out.client_move_cost + out.group_move_cost;
  require(out.sol.cost <= breakdown + tol::feas * std::max(1.0, breakdown),
          "round_config: matched cost exceeds the moving-cost bound");
  const double kbound =
      cost_guarantee_factor(gp.ell, gp.ell2) * frac.lp_value;
  require(out.sol.cost <= kbound + tol::feas * std::max(1.0, kbound),
          "round_config: cost exceeds the guarantee constant");
  return out;
}

// ---------------------------------------------------------------------------
// Cutting-plane driver
// ---------------------------------------------------------------------------

struct SolveResult {
  IntegralSolution sol;
  FractionalSolution frac;  // final master solution
  std::vector<Cut> cuts;
  int iterations = 0;
  RoundReport report;
  ConfigRoundOutcome last;  // artifacts of the successful round
};

// Solve-round loop: round the master solution; when a facility set's
// configuration system is infeasible, add the separating inequality and
// re-solve.  Every cut strictly invalidates the point that produced it.
namespace detail {

// Picks the point of the master's optimal face that the rounding attempt
// will run on.  The face is often large and highly symmetric: re-solving
// from scratch after each new inequality lands on an arbitrary vertex, and
// a certificate extracted at a vertex shaves off only that corner, so the
// loop can spend dozens of rounds wandering between symmetric corners of
// the same face.  Pinning the objective at its optimal value and maximizing
// the total slack of the accumulated inequalities instead steers the point
// toward the middle of the face, where the next certificate cuts through
// the whole face at once.
inline FractionalSolution center_on_cuts(const Instance& inst,
                                         const std::vector<Cut>& cuts,
                                         const FractionalSolution& base) {
  if (cuts.empty()) return base;
  LinearProgram lp = build_basic_lp(inst, cuts);
  const double cap =
      base.lp_value + 1e-9 * std::max(1.0, std::abs(base.lp_value));
  lp.add_row(lp.cost, RowSense::LE, cap);
  const int nf = inst.num_facilities;
  const int nc = inst.num_clients;
  const std::size_t nx = static_cast<std::size_t>(nf) * nc;
  std::vector<double> slack_obj(lp.num_vars, 0.0);
  for (const Cut& cut : cuts) {
    for (std::size_t e = 0; e < nx; ++e) slack_obj[e] += cut.gamma[e];
    for (int i = 0; i < nf; ++i) slack_obj[nx + i] += cut.beta[i];
  }
  lp.cost = std::move(slack_obj);
  const LpSolution out = solve_lp(lp);
  if (out.status != LpStatus::Optimal) return base;
  FractionalSolution frac;
  frac.x.assign(out.x.begin(), out.x.begin() + nx);
  frac.y.assign(out.x.begin() + nx, out.x.begin() + nx + nf);
  frac.lp_value = base.lp_value;
  return frac;
}

}  // namespace detail

inline SolveResult cutting_plane_solve(const Instance& inst, double epsilon,
                                       std::mt19937_64& rng,
                                       int max_iters = 50,
                                       int max_retries = 200,
                                       std::ostream* trace = nullptr) {
  require_input(max_iters >= 1, "cutting_plane_solve: max_iters must be >= 1");
  SolveResult res;
  for (int iter = 1; iter <= max_iters; ++iter) {
    res.iterations = iter;
    res.frac = detail::center_on_cuts(inst, res.cuts, solve_basic(inst, res.cuts));
    const CostShares shares = cost_shares(inst, res.frac);
    const Clustering cl =
        voronoi_partition(inst, select_representatives(inst, shares));
    if (trace)
      *trace << "iter " << iter << " lp_value "
             << format_real(res.frac.lp_value) << " cuts " << res.cuts.size()
             << "\n";
    ConfigRoundOutcome out =
        round_config(inst, res.frac, shares, cl, epsilon, rng, max_retries);
    if (out.success) {
      res.last = std::move(out);
      res.sol = res.last.sol;
      res.report.opened_total = res.sol.opened_total;
      res.report.cost = res.sol.cost;
      res.report.lp_value = res.frac.lp_value;
      res.report.ratio = res.sol.cost / res.frac.lp_value;
      res.report.cardinality_slack =
          static_cast<double>(res.sol.opened_total) / inst.k;
      res.report.cuts_emitted = static_cast<int>(res.cuts.size());
      res.report.preassign_cost = res.last.preassign_cost;
      res.report.client_move_cost = res.last.client_move_cost;
      res.report.group_move_cost = res.last.group_move_cost;
      return res;
    }
    const double viol = cut_value(out.cut, res.frac.x, res.frac.y);
    require(viol > tol::cert,
            "cutting_plane_solve: cut does not invalidate the current point");
    if (trace)
      *trace << "iter " << iter << " cut violation " << format_real(viol)
             << " set size " << out.violated_set.size() << "\n";
    res.cuts.push_back(out.cut);
  }
  throw algorithm_failure(
      "cutting_plane_solve: iteration budget exhausted after " +
      std::to_string(max_iters) + " rounds with " +
      std::to_string(res.cuts.size()) + " cuts");
}

}  // namespace ckm
