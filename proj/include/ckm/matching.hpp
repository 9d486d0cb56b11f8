#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "ckm/constants.hpp"
#include "ckm/errors.hpp"

namespace ckm {

namespace detail {

// Successive-shortest-path min-cost flow. SPFA path search tolerates the
// negative residual costs that appear after augmentation and the negative
// edge costs used for max-weight pricing.
class MinCostFlow {
  public:
    explicit MinCostFlow(int n) : n_(n), adj_(n) {}

    int add_edge(int u, int v, int cap, double cost) {
        int id = static_cast<int>(edges_.size());
        adj_[u].push_back(id);
        edges_.push_back({v, cap, cost});
        adj_[v].push_back(id + 1);
        edges_.push_back({u, 0, -cost});
        return id;
    }

    int flow_on(int id) const { return edges_[id ^ 1].cap; }

    // Pushes up to `want` units from s to t along successive shortest paths.
    // With profitable_only, stops once the best augmenting path has
    // nonnegative cost. Returns (units pushed, total cost).
    std::pair<int, double> run(int s, int t, int want, bool profitable_only) {
        int pushed = 0;
        double total = 0.0;
        while (pushed < want) {
            if (!spfa(s, t)) break;
            if (profitable_only && dist_[t] >= -tol::pivot) break;
            int bottleneck = want - pushed;
            for (int v = t; v != s; v = edges_[prev_[v] ^ 1].to)
                bottleneck = std::min(bottleneck, edges_[prev_[v]].cap);
            for (int v = t; v != s; v = edges_[prev_[v] ^ 1].to) {
                edges_[prev_[v]].cap -= bottleneck;
                edges_[prev_[v] ^ 1].cap += bottleneck;
            }
            pushed += bottleneck;
            total += bottleneck * dist_[t];
        }
        return {pushed, total};
    }

  private:
    struct Edge { int to; int cap; double cost; };
    int n_;
    std::vector<std::vector<int>> adj_;
    std::vector<Edge> edges_;
    std::vector<double> dist_;
    std::vector<int> prev_;

    bool spfa(int s, int t) {
        dist_.assign(n_, std::numeric_limits<double>::infinity());
        prev_.assign(n_, -1);
        std::vector<char> inq(n_, 0);
        std::deque<int> q;
        dist_[s] = 0.0;
        q.push_back(s);
        inq[s] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            inq[u] = 0;
            for (int id : adj_[u]) {
                const Edge& e = edges_[id];
                if (e.cap <= 0) continue;
                double nd = dist_[u] + e.cost;
                if (nd < dist_[e.to] - 1e-13) {
                    dist_[e.to] = nd;
                    prev_[e.to] = id;
                    if (!inq[e.to]) {
                        q.push_back(e.to);
                        inq[e.to] = 1;
                    }
                }
            }
        }
        return prev_[t] >= 0;
    }
};

}  // namespace detail

struct BMatchResult {
    std::vector<int> assign;  // per client: facility index, or -1 if unmatched
    double cost = 0.0;        // total over matched edges (signed weights kept)
    int matched = 0;
};

// Cheapest assignment of every client to a facility, client degree 1 and
// facility i serving at most caps[i] clients. cost[i][j] >= 0.
inline BMatchResult min_cost_b_matching(const std::vector<std::vector<double>>& cost,
                                        const std::vector<int>& caps) {
    const int nf = static_cast<int>(caps.size());
    const int nc = nf ? static_cast<int>(cost[0].size()) : 0;
    long long total_cap = 0;
    for (int c : caps) {
        require(c >= 0, "negative capacity");
        total_cap += c;
    }
    require_input(total_cap >= nc, "matching infeasible: capacity " +
                                       std::to_string(total_cap) + " < clients " +
                                       std::to_string(nc));
    const int s = 0, t = nf + nc + 1;
    detail::MinCostFlow g(nf + nc + 2);
    std::vector<std::vector<int>> eid(nf, std::vector<int>(nc, -1));
    for (int i = 0; i < nf; ++i)
        if (caps[i] > 0) g.add_edge(s, 1 + i, caps[i], 0.0);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nc; ++j)
            if (caps[i] > 0) eid[i][j] = g.add_edge(1 + i, 1 + nf + j, 1, cost[i][j]);
    for (int j = 0; j < nc; ++j) g.add_edge(1 + nf + j, t, 1, 0.0);
    auto [pushed, total] = g.run(s, t, nc, false);
    require(pushed == nc, "matching failed despite sufficient capacity");
    BMatchResult res;
    res.assign.assign(nc, -1);
    res.matched = nc;
    res.cost = total;
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nc; ++j)
            if (eid[i][j] >= 0 && g.flow_on(eid[i][j]) > 0) res.assign[j] = i;
    return res;
}

// Maximum-weight matching where clients may stay unmatched; only
// positive-weight edges can help, so others are dropped up front.
inline BMatchResult max_weight_partial_matching(const std::vector<std::vector<double>>& weight,
                                                const std::vector<int>& caps) {
    const int nf = static_cast<int>(caps.size());
    const int nc = nf ? static_cast<int>(weight[0].size()) : 0;
    const int s = 0, t = nf + nc + 1;
    detail::MinCostFlow g(nf + nc + 2);
    std::vector<std::vector<int>> eid(nf, std::vector<int>(nc, -1));
    for (int i = 0; i < nf; ++i)
        if (caps[i] > 0) g.add_edge(s, 1 + i, caps[i], 0.0);
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nc; ++j)
            if (caps[i] > 0 && weight[i][j] > tol::pivot)
                eid[i][j] = g.add_edge(1 + i, 1 + nf + j, 1, -weight[i][j]);
    for (int j = 0; j < nc; ++j) g.add_edge(1 + nf + j, t, 1, 0.0);
    auto [pushed, total] = g.run(s, t, nc, true);
    BMatchResult res;
    res.assign.assign(nc, -1);
    res.matched = pushed;
    res.cost = -total;
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nc; ++j)
            if (eid[i][j] >= 0 && g.flow_on(eid[i][j]) > 0) res.assign[j] = i;
    return res;
}

}  // namespace ckm
