#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ckm/constants.hpp"
#include "ckm/errors.hpp"

namespace ckm {

// Dependent rounding of a fractional bipartite assignment w[l][r] in [0,1].
// Repeatedly finds a cycle or a leaf-to-leaf path in the graph of fractional
// edges and shifts alternate edges by the largest step that keeps weights in
// [0,1], choosing the direction with probability proportional to the opposite
// step so every edge keeps its marginal in expectation. Vertices interior to
// the walk keep their degree exactly, so every vertex ends with degree in
// {floor, ceil} of its fractional degree.
inline std::vector<std::vector<int>> dependent_round(std::vector<std::vector<double>> w,
                                                     std::mt19937_64& rng) {
    const int nl = static_cast<int>(w.size());
    const int nr = nl ? static_cast<int>(w[0].size()) : 0;
    struct Edge { int l, r; };
    std::vector<Edge> edges;
    for (int l = 0; l < nl; ++l)
        for (int r = 0; r < nr; ++r) {
            require(w[l][r] > -tol::mass && w[l][r] < 1.0 + tol::mass,
                    "fractional weight outside [0,1]");
            edges.push_back({l, r});
        }
    auto frac = [&](int id) {
        double v = w[edges[id].l][edges[id].r];
        return v > tol::mass && v < 1.0 - tol::mass;
    };
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const long iter_cap = 4L * static_cast<long>(edges.size()) + 16;
    for (long iter = 0;; ++iter) {
        require(iter <= iter_cap, "dependent rounding failed to terminate");
        // Fractional-edge adjacency; node v < nl is a left node, else right.
        std::vector<std::vector<int>> adj(nl + nr);
        for (int id = 0; id < static_cast<int>(edges.size()); ++id)
            if (frac(id)) {
                adj[edges[id].l].push_back(id);
                adj[nl + edges[id].r].push_back(id);
            }
        int start = -1;
        for (int v = 0; v < nl + nr && start < 0; ++v)
            if (adj[v].size() == 1) start = v;
        if (start < 0)
            for (int v = 0; v < nl + nr && start < 0; ++v)
                if (!adj[v].empty()) start = v;
        if (start < 0) break;  // everything integral

        // Walk from `start`, never reusing the arrival edge, until stuck at a
        // leaf (maximal path) or a vertex repeats (extract the cycle).
        std::vector<int> walk, chain;
        std::vector<int> seen(nl + nr, -1);
        seen[start] = 0;
        int cur = start, in_edge = -1, steps = 1;
        while (true) {
            int nxt = -1;
            for (int id : adj[cur])
                if (id != in_edge) { nxt = id; break; }
            if (nxt < 0) { chain = walk; break; }  // leaf-to-leaf path
            int other = cur < nl ? nl + edges[nxt].r : edges[nxt].l;
            walk.push_back(nxt);
            if (seen[other] >= 0) {
                chain.assign(walk.begin() + seen[other], walk.end());
                break;
            }
            seen[other] = steps++;
            cur = other;
            in_edge = nxt;
        }
        require(!chain.empty(), "empty rounding walk");

        double up0 = 2.0, up1 = 2.0;  // max step raising evens / raising odds
        for (size_t p = 0; p < chain.size(); ++p) {
            double v = w[edges[chain[p]].l][edges[chain[p]].r];
            if (p % 2 == 0) {
                up0 = std::min(up0, 1.0 - v);
                up1 = std::min(up1, v);
            } else {
                up0 = std::min(up0, v);
                up1 = std::min(up1, 1.0 - v);
            }
        }
        bool raise_even = unit(rng) < up1 / (up0 + up1);
        double step = raise_even ? up0 : up1;
        for (size_t p = 0; p < chain.size(); ++p) {
            double& v = w[edges[chain[p]].l][edges[chain[p]].r];
            bool up = (p % 2 == 0) == raise_even;
            v += up ? step : -step;
            if (v < tol::mass) v = 0.0;
            if (v > 1.0 - tol::mass) v = 1.0;
        }
    }

    std::vector<std::vector<int>> out(nl, std::vector<int>(nr, 0));
    for (int l = 0; l < nl; ++l)
        for (int r = 0; r < nr; ++r) out[l][r] = w[l][r] > 0.5 ? 1 : 0;
    return out;
}

}  // namespace ckm
