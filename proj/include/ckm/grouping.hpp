#pragma once
// Spanning-tree machinery over the representatives: Kruskal with merge-time
// edge coloring, contraction of same-color components into a rooted forest,
// and greedy decomposition of each tree into weight-bounded subtrees whose
// node sets become the facility groups used by the rounding stage.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "ckm/cluster.hpp"
#include "ckm/constants.hpp"
#include "ckm/errors.hpp"
#include "ckm/instance.hpp"

namespace ckm {

enum class EdgeColor { Black, Grey, White };

// One spanning-tree edge between representative positions u < v (indices into
// Clustering::reps).  Grey edges are directed from the light side toward the
// heavy side at merge time.
struct MstEdge {
  int u = -1;
  int v = -1;
  double length = 0.0;
  EdgeColor color = EdgeColor::Black;
  int grey_from = -1;  // light-side rep position (grey edges only)
  int grey_to = -1;    // heavy-side rep position (grey edges only)
};

// Spanning tree over the representatives with merge-time colors.
//   edges:   in insertion (Kruskal) order
//   weights: weights[p] = opening mass of the cluster at rep position p
struct ColoredMst {
  int num_reps = 0;
  std::vector<MstEdge> edges;
  std::vector<double> weights;
};

namespace detail {

// Union-find over rep positions carrying component weight.
struct WeightedUnionFind {
  std::vector<int> parent;
  std::vector<double> weight;
  explicit WeightedUnionFind(const std::vector<double>& w)
      : parent(w.size()), weight(w) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int ra, int rb) {
    parent[rb] = ra;
    weight[ra] += weight[rb];
  }
};

}  // namespace detail

// Builds the spanning tree over representatives by Kruskal's algorithm,
// edges sorted by (length, endpoint positions).  At each merge the two
// current components are classified as light (weight < ell) or heavy
// (weight >= ell): light+light edges are black, light+heavy edges are grey
// (directed light to heavy), heavy+heavy edges are white.
inline ColoredMst build_colored_mst(const Instance& inst, const Clustering& cl,
                                    const FractionalSolution& frac, int ell) {
  require_input(ell >= 1, "build_colored_mst: ell must be >= 1");
  const int nr = static_cast<int>(cl.reps.size());
  require(nr >= 1, "build_colored_mst: no representatives");
  ColoredMst mst;
  mst.num_reps = nr;
  mst.weights.resize(nr);
  for (int p = 0; p < nr; ++p)
    mst.weights[p] = cluster_weight(cl, frac.y, static_cast<std::size_t>(p));

  struct Cand {
    double len;
    int u, v;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(nr) * (nr - 1) / 2);
  for (int u = 0; u < nr; ++u)
    for (int v = u + 1; v < nr; ++v)
      cands.push_back({inst.d_cc(cl.reps[u], cl.reps[v]), u, v});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.len != b.len) return a.len < b.len;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  detail::WeightedUnionFind uf(mst.weights);
  const double thr = static_cast<double>(ell);
  for (const Cand& c : cands) {
    const int ru = uf.find(c.u), rv = uf.find(c.v);
    if (ru == rv) continue;
    MstEdge e;
    e.u = c.u;
    e.v = c.v;
    e.length = c.len;
    const bool u_heavy = uf.weight[ru] >= thr;
    const bool v_heavy = uf.weight[rv] >= thr;
    if (!u_heavy && !v_heavy) {
      e.color = EdgeColor::Black;
    } else if (u_heavy && v_heavy) {
      e.color = EdgeColor::White;
    } else {
      e.color = EdgeColor::Grey;
      e.grey_from = u_heavy ? c.v : c.u;
      e.grey_to = u_heavy ? c.u : c.v;
    }
    mst.edges.push_back(e);
    uf.unite(ru, rv);
  }
  require(static_cast<int>(mst.edges.size()) == nr - 1,
          "build_colored_mst: not a spanning tree");
  return mst;
}

// A node of the contracted forest: one maximal black component.
struct ForestNode {
  std::vector<int> members;  // rep positions, ascending
  double weight = 0.0;       // total opening mass of the members' clusters
  int parent = -1;           // node id, or -1 for a tree root
  double parent_len = 0.0;   // length of the grey edge to the parent
  std::vector<int> children;  // node ids, ascending
  int root = -1;             // root node id of this node's tree
  int depth = 0;             // distance to the root
};

// Forest obtained by contracting black components and dropping white edges;
// grey edges become parent links.
struct ContractedForest {
  std::vector<ForestNode> nodes;
  std::vector<int> node_of;  // rep position -> node id
  std::vector<int> roots;    // node ids, ascending
};

// Contracts a colored spanning tree.  Verifies the structural guarantees and
// throws internal_error if any fails:
//   - every non-root node is light, every root is heavy (the single-tree,
//     all-light forest being the one exception),
//   - every root is either light-rooted as above, has weight <= 2*ell, or is
//     a single-rep component,
//   - parent grey edge lengths are non-increasing on every leaf-to-root walk,
//   - each non-root node's parent edge length equals the distance from the
//     node's reps to all other reps,
//   - black edges inside a component are no longer than that distance.
inline ContractedForest contract(const Instance& inst, const Clustering& cl,
                                 const ColoredMst& mst, int ell) {
  const int nr = mst.num_reps;
  ContractedForest f;

  // Black components via union-find over black edges only.
  std::vector<int> comp_parent(nr);
  std::iota(comp_parent.begin(), comp_parent.end(), 0);
  const auto find = [&](int a) {
    while (comp_parent[a] != a) {
      comp_parent[a] = comp_parent[comp_parent[a]];
      a = comp_parent[a];
    }
    return a;
  };
  for (const MstEdge& e : mst.edges)
    if (e.color == EdgeColor::Black) comp_parent[find(e.u)] = find(e.v);

  // Number components by their smallest rep position.
  std::vector<int> comp_id(nr, -1);
  f.node_of.assign(nr, -1);
  for (int p = 0; p < nr; ++p) {
    const int r = find(p);
    if (comp_id[r] == -1) {
      comp_id[r] = static_cast<int>(f.nodes.size());
      f.nodes.emplace_back();
    }
    const int id = comp_id[r];
    f.node_of[p] = id;
    f.nodes[id].members.push_back(p);
    f.nodes[id].weight += mst.weights[p];
  }

  // Grey edges become parent links; white edges split trees.
  for (const MstEdge& e : mst.edges) {
    if (e.color != EdgeColor::Grey) continue;
    const int from = f.node_of[e.grey_from];
    const int to = f.node_of[e.grey_to];
    require(from != to, "contract: grey edge inside one component");
    require(f.nodes[from].parent == -1,
            "contract: component with two parent links");
    f.nodes[from].parent = to;
    f.nodes[from].parent_len = e.length;
  }
  for (std::size_t id = 0; id < f.nodes.size(); ++id) {
    const int par = f.nodes[id].parent;
    if (par >= 0)
      f.nodes[par].children.push_back(static_cast<int>(id));
    else
      f.roots.push_back(static_cast<int>(id));
  }

  // Root / depth annotation (parent links form a forest by construction).
  for (int r : f.roots) {
    std::vector<int> stack = {r};
    f.nodes[r].root = r;
    f.nodes[r].depth = 0;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for (int c : f.nodes[p].children) {
        f.nodes[c].root = r;
        f.nodes[c].depth = f.nodes[p].depth + 1;
        stack.push_back(c);
      }
    }
  }
  for (const ForestNode& n : f.nodes)
    require(n.root >= 0, "contract: parent links contain a cycle");

  // --- structural guarantees ---
  const double thr = static_cast<double>(ell);
  const bool all_light_single =
      f.nodes.size() == 1 && f.nodes[0].weight < thr;
  for (std::size_t id = 0; id < f.nodes.size(); ++id) {
    const ForestNode& n = f.nodes[id];
    if (n.parent == -1) {
      require(all_light_single || n.weight >= thr - tol::feas,
              "contract: light root component");
      require(n.weight <= 2.0 * thr + tol::feas || n.members.size() == 1 ||
                  all_light_single,
              "contract: heavy multi-rep root exceeds twice the threshold");
    } else {
      require(n.weight < thr + tol::feas, "contract: heavy non-root component");
      require(f.nodes[n.parent].parent_len <= n.parent_len + tol::cert ||
                  f.nodes[n.parent].parent == -1,
              "contract: parent edge longer than child edge on a root walk");
    }
  }
  // Parent edge length equals the component's distance to the rest, and black
  // edges inside the component never exceed it.
  if (f.nodes.size() > 1) {
    std::vector<double> out_dist(f.nodes.size(), kInf);
    for (std::size_t id = 0; id < f.nodes.size(); ++id) {
      for (int p : f.nodes[id].members)
        for (int q = 0; q < nr; ++q) {
          if (f.node_of[q] == static_cast<int>(id)) continue;
          out_dist[id] =
              std::min(out_dist[id], inst.d_cc(cl.reps[p], cl.reps[q]));
        }
    }
    for (std::size_t id = 0; id < f.nodes.size(); ++id) {
      const ForestNode& n = f.nodes[id];
      if (n.parent != -1)
        require(std::abs(n.parent_len - out_dist[id]) <= tol::cert,
                "contract: parent edge is not the shortest way out");
    }
    for (const MstEdge& e : mst.edges) {
      if (e.color != EdgeColor::Black) continue;
      const int id = f.node_of[e.u];
      require(e.length <= out_dist[id] + tol::cert,
              "contract: internal black edge longer than the way out");
    }
  }
  return f;
}

// Shortest rep-to-rep distance from the members of node `id` to all other
// reps; +inf when the forest has a single node.
inline double node_out_distance(const Instance& inst, const Clustering& cl,
                                const ContractedForest& f, int id) {
  double best = kInf;
  const int nr = static_cast<int>(cl.reps.size());
  for (int p : f.nodes[id].members)
    for (int q = 0; q < nr; ++q) {
      if (f.node_of[q] == id) continue;
      best = std::min(best, inst.d_cc(cl.reps[p], cl.reps[q]));
    }
  return best;
}

// One subtree emitted by the decomposition: rooted at `root_node`, containing
// `nodes` (root included); `group_nodes` = nodes minus the root, whose member
// reps form the subtree's facility group.
struct Subtree {
  int root_node = -1;
  std::vector<int> nodes;        // ascending node ids, includes root_node
  std::vector<int> group_nodes;  // ascending node ids, excludes root_node
  bool is_remainder = false;     // true for the final tree left at the root
};

// Decomposition of one tree of the forest.
struct TreeDecomposition {
  int root_node = -1;
  std::vector<Subtree> subtrees;  // emission order; last is the remainder
};

// A facility group: the union of clusters over a set of rep positions.
struct Group {
  std::vector<int> reps;    // rep positions, ascending
  int tree_index = -1;      // index into GroupDecomposition::trees
  int subtree_index = -1;   // index into that tree's subtrees, -1 for the
                            // root group
  bool is_root_group = false;
};

struct GroupDecomposition {
  std::vector<TreeDecomposition> trees;
  std::vector<Group> groups;
};

// Greedy decomposition of every tree.  Repeatedly take the deepest node p
// whose strict descendants weigh at least ell (ties by smallest node id),
// scan its children in ascending id accumulating whole child subtrees:
// as soon as the running total reaches ell, emit either the accumulated
// children (total < 2*ell) or, if the last child pushed the total to 2*ell
// or more, that child alone (its subtree weight then lies in [ell, 2*ell)).
// Emitted child subtrees are removed; p stays.  When no node qualifies the
// remaining tree is emitted as the remainder.  Groups are the non-root node
// sets of every subtree plus, per tree, the root node's own members.
inline GroupDecomposition decompose(const ContractedForest& f, int ell) {
  require_input(ell >= 1, "decompose: ell must be >= 1");
  const double thr = static_cast<double>(ell);
  const int nn = static_cast<int>(f.nodes.size());
  GroupDecomposition dec;

  std::vector<char> alive(nn, 1);
  std::vector<std::vector<int>> kids(nn);
  for (int id = 0; id < nn; ++id) kids[id] = f.nodes[id].children;

  for (int root : f.roots) {
    TreeDecomposition td;
    td.root_node = root;

    // Node ids of this tree.
    std::vector<int> tree_nodes;
    {
      std::vector<int> stack = {root};
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        tree_nodes.push_back(p);
        for (int c : kids[p]) stack.push_back(c);
      }
      std::sort(tree_nodes.begin(), tree_nodes.end());
    }

    const auto subtree_weight = [&](int p) {
      double w = 0.0;
      std::vector<int> stack = {p};
      while (!stack.empty()) {
        const int q = stack.back();
        stack.pop_back();
        w += f.nodes[q].weight;
        for (int c : kids[q]) stack.push_back(c);
      }
      return w;
    };
    const auto collect_nodes = [&](int p, std::vector<int>& out) {
      std::vector<int> stack = {p};
      while (!stack.empty()) {
        const int q = stack.back();
        stack.pop_back();
        out.push_back(q);
        for (int c : kids[q]) stack.push_back(c);
      }
    };

    for (;;) {
      // Deepest node whose strict descendants weigh >= ell.
      int pick = -1;
      for (int p : tree_nodes) {
        if (!alive[p]) continue;
        const double strict = subtree_weight(p) - f.nodes[p].weight;
        if (strict < thr) continue;
        if (pick == -1 || f.nodes[p].depth > f.nodes[pick].depth ||
            (f.nodes[p].depth == f.nodes[pick].depth && p < pick))
          pick = p;
      }
      if (pick == -1) break;

      std::vector<int> chosen;
      double acc = 0.0;
      for (int c : kids[pick]) {
        const double w = subtree_weight(c);
        chosen.push_back(c);
        acc += w;
        if (acc >= thr) {
          if (acc >= 2.0 * thr) {
            require(w >= thr && w < 2.0 * thr,
                    "decompose: overshooting child subtree out of range");
            chosen.assign(1, c);
            acc = w;
          }
          break;
        }
      }
      require(acc >= thr && acc < 2.0 * thr,
              "decompose: accumulated weight out of range");

      Subtree st;
      st.root_node = pick;
      st.nodes.push_back(pick);
      for (int c : chosen) collect_nodes(c, st.nodes);
      std::sort(st.nodes.begin(), st.nodes.end());
      st.group_nodes = st.nodes;
      st.group_nodes.erase(
          std::remove(st.group_nodes.begin(), st.group_nodes.end(), pick),
          st.group_nodes.end());
      for (int q : st.group_nodes) alive[q] = 0;
      // Detach the chosen children from pick.
      std::vector<int> rest;
      for (int c : kids[pick])
        if (std::find(chosen.begin(), chosen.end(), c) == chosen.end())
          rest.push_back(c);
      kids[pick] = std::move(rest);
      td.subtrees.push_back(std::move(st));
    }

    // Remainder: everything still alive in this tree, rooted at the root.
    Subtree rem;
    rem.root_node = root;
    rem.is_remainder = true;
    for (int p : tree_nodes)
      if (alive[p]) rem.nodes.push_back(p);
    rem.group_nodes = rem.nodes;
    rem.group_nodes.erase(
        std::remove(rem.group_nodes.begin(), rem.group_nodes.end(), root),
        rem.group_nodes.end());
    td.subtrees.push_back(std::move(rem));
    dec.trees.push_back(std::move(td));
  }

  // Derive the groups and verify the decomposition guarantees.
  for (std::size_t t = 0; t < dec.trees.size(); ++t) {
    const TreeDecomposition& td = dec.trees[t];
    double tree_weight = 0.0;
    std::vector<int> seen;  // non-root node occurrences across subtrees
    for (std::size_t s = 0; s < td.subtrees.size(); ++s) {
      const Subtree& st = td.subtrees[s];
      double gw = 0.0;
      int reps_in_subtree = 0;
      for (int q : st.nodes)
        reps_in_subtree += static_cast<int>(f.nodes[q].members.size());
      for (int q : st.group_nodes) {
        gw += f.nodes[q].weight;
        seen.push_back(q);
      }
      require(reps_in_subtree <= 8 * ell,
              "decompose: subtree spans too many reps");
      if (!st.is_remainder)
        require(gw >= thr - tol::feas && gw <= 2.0 * thr + tol::feas,
                "decompose: emitted group weight out of range");
      else
        require(gw < thr + tol::feas,
                "decompose: remainder group weight too large");
      if (!st.group_nodes.empty()) {
        Group g;
        g.tree_index = static_cast<int>(t);
        g.subtree_index = static_cast<int>(s);
        for (int q : st.group_nodes)
          for (int p : f.nodes[q].members) g.reps.push_back(p);
        std::sort(g.reps.begin(), g.reps.end());
        dec.groups.push_back(std::move(g));
      }
    }
    // Root group: the root node's own members.
    {
      Group g;
      g.tree_index = static_cast<int>(t);
      g.is_root_group = true;
      g.reps = f.nodes[td.root_node].members;
      dec.groups.push_back(std::move(g));
    }
    // Every non-root node of the tree in exactly one subtree as non-root.
    std::sort(seen.begin(), seen.end());
    require(std::adjacent_find(seen.begin(), seen.end()) == seen.end(),
            "decompose: node emitted twice");
    std::vector<int> expect;
    for (std::size_t id = 0; id < f.nodes.size(); ++id)
      if (f.nodes[id].root == td.root_node && static_cast<int>(id) != td.root_node)
        expect.push_back(static_cast<int>(id));
    require(seen == expect, "decompose: non-root nodes not covered exactly");
    // Subtree count bound, meaningful when the root is heavy.
    for (std::size_t id = 0; id < f.nodes.size(); ++id)
      if (f.nodes[id].root == td.root_node) tree_weight += f.nodes[id].weight;
    if (f.nodes[td.root_node].weight >= thr - tol::feas)
      require(static_cast<double>(td.subtrees.size()) <=
                  tree_weight / thr + tol::feas,
              "decompose: too many subtrees for the tree weight");
  }

  // Groups partition the rep positions.
  std::vector<int> all;
  for (const Group& g : dec.groups)
    all.insert(all.end(), g.reps.begin(), g.reps.end());
  std::sort(all.begin(), all.end());
  std::vector<int> want(f.node_of.size());
  std::iota(want.begin(), want.end(), 0);
  require(all == want, "decompose: groups do not partition the reps");
  return dec;
}

}  // namespace ckm
