#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "instmeter/errors.hpp"

namespace oracle {

using instmeter::Cfg;
using instmeter::CfgEdge;
using instmeter::CfgNode;
using instmeter::RelationEdgeKind;
using instmeter::RelationGraph;

std::map<int, std::set<int>> dominator_sets(const Cfg& g) {
  std::set<int> reachable;
  std::vector<int> stack{g.entry};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (!reachable.insert(n).second) continue;
    for (int s : g.succ.at(n)) stack.push_back(s);
  }

  std::set<int> everything = reachable;
  std::map<int, std::set<int>> dom;
  for (int n : reachable) dom[n] = n == g.entry ? std::set<int>{n} : everything;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int n : reachable) {
      if (n == g.entry) continue;
      std::set<int> acc = everything;
      for (int p : g.pred.at(n)) {
        if (!reachable.count(p)) continue;
        std::set<int> next;
        std::set_intersection(acc.begin(), acc.end(), dom[p].begin(), dom[p].end(),
                              std::inserter(next, next.begin()));
        acc = std::move(next);
      }
      acc.insert(n);
      if (acc != dom[n]) {
        dom[n] = std::move(acc);
        changed = true;
      }
    }
  }
  return dom;
}

bool reaches_avoiding(const Cfg& g, int from, int to, int avoid) {
  if (from == avoid) return false;
  std::set<int> seen;
  std::vector<int> stack{from};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (n == avoid || !seen.insert(n).second) continue;
    if (n == to) return true;
    for (int s : g.succ.at(n)) stack.push_back(s);
  }
  return false;
}

std::vector<SimpleLoop> natural_loops(const Cfg& g) {
  std::map<int, std::set<int>> dom = dominator_sets(g);
  std::vector<SimpleLoop> out;
  for (const CfgEdge& e : g.edges) {
    if (!dom.count(e.from)) continue;  // unreachable source
    if (!dom.at(e.from).count(e.to)) continue;
    SimpleLoop L;
    L.header = e.to;
    L.back_from = e.from;
    L.body.insert(e.to);
    for (const auto& [n, _] : dom) {
      (void)_;
      if (n == e.to) continue;
      if (n == e.from || reaches_avoiding(g, n, e.from, e.to)) L.body.insert(n);
    }
    out.push_back(std::move(L));
  }
  std::sort(out.begin(), out.end(), [](const SimpleLoop& a, const SimpleLoop& b) {
    return std::tie(a.header, a.back_from) < std::tie(b.header, b.back_from);
  });
  return out;
}

instmeter::Cfg random_reducible_cfg(std::mt19937_64& rng, int max_nodes) {
  int n = static_cast<int>(uniform_int(rng, 2, max_nodes));
  // Forward skeleton over nodes 0..n-1: each node (except the last) gets one
  // or two forward successors, keeping everything reachable from 0.
  std::vector<CfgEdge> edges;
  for (int i = 0; i + 1 < n; ++i) {
    int a = static_cast<int>(uniform_int(rng, i + 1, n - 1));
    edges.push_back({i, a});
    if (uniform_int(rng, 0, 2) == 0) {
      int b = static_cast<int>(uniform_int(rng, i + 1, n - 1));
      if (b != a) edges.push_back({i, b});
    }
  }
  std::vector<CfgNode> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({i, {}});
  Cfg skeleton = instmeter::build_cfg(nodes, edges, 0);

  // Retreating edges that target a dominator of their source are back edges,
  // so adding only those keeps the graph reducible.
  std::map<int, std::set<int>> dom = dominator_sets(skeleton);
  int extra = static_cast<int>(uniform_int(rng, 0, 3));
  for (int k = 0; k < extra; ++k) {
    int from = static_cast<int>(uniform_int(rng, 0, n - 1));
    if (!dom.count(from)) continue;
    std::vector<int> targets(dom.at(from).begin(), dom.at(from).end());
    int to = targets[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(targets.size()) - 1))];
    edges.push_back({from, to});
  }
  return instmeter::build_cfg(nodes, edges, 0);
}

RelationGraph permute_relation_graph(const RelationGraph& g, const std::vector<int>& perm) {
  RelationGraph out;
  std::vector<int> pos_of_old(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    pos_of_old[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);

  int next_loop_id = 1;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const instmeter::RelationNode& src = g.nodes[static_cast<std::size_t>(perm[i])];
    instmeter::RelationNode n;
    for (std::size_t k = 0; k < src.loop_ids.size(); ++k) n.loop_ids.push_back(next_loop_id++);
    out.nodes.push_back(std::move(n));
    out.bodies.push_back(g.bodies[static_cast<std::size_t>(perm[i])]);
  }
  for (const instmeter::RelationEdge& e : g.edges) {
    instmeter::RelationEdge ne = e;
    ne.a = pos_of_old[static_cast<std::size_t>(e.a)];
    ne.b = pos_of_old[static_cast<std::size_t>(e.b)];
    if (ne.kind == RelationEdgeKind::Intersect && ne.a > ne.b) std::swap(ne.a, ne.b);
    out.edges.push_back(ne);
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const instmeter::RelationEdge& x, const instmeter::RelationEdge& y) {
              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });
  return out;
}

namespace {

// 0 = no edge; 1 = subset a->b; 2 = subset b->a; 3 = intersect.
std::vector<std::vector<int>> label_matrix(const RelationGraph& g) {
  std::size_t n = g.nodes.size();
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  for (const instmeter::RelationEdge& e : g.edges) {
    std::size_t a = static_cast<std::size_t>(e.a), b = static_cast<std::size_t>(e.b);
    if (e.kind == RelationEdgeKind::Subset) {
      m[a][b] = 1;
      m[b][a] = 2;
    } else {
      m[a][b] = m[b][a] = 3;
    }
  }
  return m;
}

}  // namespace

std::vector<std::vector<int>> all_node_bijections(const RelationGraph& a,
                                                  const RelationGraph& b) {
  std::vector<std::vector<int>> out;
  if (a.nodes.size() != b.nodes.size()) return out;
  std::size_t n = a.nodes.size();
  std::vector<std::vector<int>> la = label_matrix(a), lb = label_matrix(b);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (a.nodes[i].loop_ids.size() !=
          b.nodes[static_cast<std::size_t>(perm[i])].loop_ids.size())
        ok = false;
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (i == j) continue;
        if (la[i][j] != lb[static_cast<std::size_t>(perm[i])][static_cast<std::size_t>(perm[j])])
          ok = false;
      }
    }
    if (ok) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> node_bijection_of(const std::vector<std::pair<int, int>>& loop_pairs,
                                   const std::map<int, int>& src_node_of_loop,
                                   const std::map<int, int>& bin_node_of_loop,
                                   std::size_t n_nodes) {
  std::vector<int> bij(n_nodes, -1);
  for (const auto& [s, t] : loop_pairs) {
    int sn = src_node_of_loop.at(s);
    int tn = bin_node_of_loop.at(t);
    bij[static_cast<std::size_t>(sn)] = tn;
  }
  return bij;
}

double trace_cycles(const instmeter::BinFunction& fn, const instmeter::BinCfg& bc,
                    const std::vector<instmeter::Loop>& loops,
                    const std::map<int, std::int64_t>& trips, const instmeter::CpiTable& cpi,
                    std::size_t max_steps) {
  std::map<int, std::int64_t> iter;  // loop id -> completed iterations
  double total = 0.0;
  int block = bc.cfg.entry;
  std::size_t steps = 0;
  for (;;) {
    if (++steps > max_steps) throw instmeter::Error("trace did not terminate");
    for (std::size_t idx : bc.block_instrs[static_cast<std::size_t>(block)])
      total += cpi.cost(instmeter::strip_suffix(fn.instructions[idx].mnemonic));
    const std::vector<int>& next = bc.cfg.succ.at(block);
    if (next.empty()) break;
    if (next.size() == 1) {
      block = next[0];
      continue;
    }
    if (next.size() != 2) throw instmeter::Error("trace: block with >2 successors");
    const instmeter::Loop* latch_of = nullptr;
    for (const instmeter::Loop& l : loops)
      if (l.back_edge.first == block) {
        if (latch_of) throw instmeter::Error("trace: block is the latch of two loops");
        latch_of = &l;
      }
    if (!latch_of) throw instmeter::Error("trace: branching block is not a loop latch");
    std::int64_t want = trips.at(latch_of->id);
    std::int64_t done = ++iter[latch_of->id];
    int header = latch_of->back_edge.second;
    int other = next[0] == header ? next[1] : next[0];
    if (done < want) {
      block = header;
    } else {
      iter[latch_of->id] = 0;
      block = other;
    }
  }
  return total;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

double gauss(std::mt19937_64& rng) {
  double u1 = 0.0;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  std::uint64_t mask = span - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = rng() & mask;
    if (v < span) return lo + static_cast<std::int64_t>(v);
  }
}

}  // namespace oracle
