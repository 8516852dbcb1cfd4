#include "instmeter/cfg.hpp"

#include <algorithm>
#include <functional>

namespace instmeter {

const CfgNode* Cfg::find(int id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const CfgNode& n, int v) { return n.id < v; });
  return it != nodes.end() && it->id == id ? &*it : nullptr;
}

Cfg build_cfg(std::vector<CfgNode> nodes, std::vector<CfgEdge> edges, int entry) {
  Cfg g;
  std::sort(nodes.begin(), nodes.end(),
            [](const CfgNode& a, const CfgNode& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (nodes[i].id == nodes[i - 1].id)
      throw ValidationError("duplicate node id " + std::to_string(nodes[i].id));
  g.nodes = std::move(nodes);
  g.entry = entry;

  for (const CfgNode& n : g.nodes) {
    g.succ[n.id];
    g.pred[n.id];
  }
  if (!g.has_node(entry))
    throw ValidationError("entry node " + std::to_string(entry) + " does not exist");

  std::sort(edges.begin(), edges.end(), [](const CfgEdge& a, const CfgEdge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const CfgEdge& a, const CfgEdge& b) {
                            return a.from == b.from && a.to == b.to;
                          }),
              edges.end());
  for (const CfgEdge& e : edges) {
    if (!g.has_node(e.from) || !g.has_node(e.to))
      throw ValidationError("edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) +
                            " references a missing node");
    g.succ[e.from].push_back(e.to);
    g.pred[e.to].push_back(e.from);
  }
  g.edges = std::move(edges);

  // Flag nodes the entry cannot reach.
  std::set<int> seen{g.entry};
  std::vector<int> stack{g.entry};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (int s : g.succ[n])
      if (seen.insert(s).second) stack.push_back(s);
  }
  for (const CfgNode& n : g.nodes)
    if (!seen.count(n.id)) g.unreachable.insert(n.id);
  return g;
}

namespace {

// Immediate dominators over the reachable subgraph, via the standard
// iterate-to-fixpoint intersection on a reverse postorder numbering.
struct Dominators {
  std::vector<int> order;           // reverse postorder of reachable nodes
  std::map<int, int> rpo;           // node id -> position in `order`
  std::map<int, int> idom;          // node id -> immediate dominator id

  Dominators(const Cfg& g) {
    std::set<int> visited;
    std::vector<int> post;
    // Iterative DFS with deterministic (sorted) successor order.
    std::vector<std::pair<int, std::size_t>> stack;
    stack.emplace_back(g.entry, 0);
    visited.insert(g.entry);
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      const std::vector<int>& succ = g.succ.at(n);
      if (i < succ.size()) {
        int s = succ[i++];
        if (visited.insert(s).second) stack.emplace_back(s, 0);
      } else {
        post.push_back(n);
        stack.pop_back();
      }
    }
    order.assign(post.rbegin(), post.rend());
    for (std::size_t i = 0; i < order.size(); ++i) rpo[order[i]] = static_cast<int>(i);

    idom[g.entry] = g.entry;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int n : order) {
        if (n == g.entry) continue;
        int new_idom = -1;
        for (int p : g.pred.at(n)) {
          if (!idom.count(p)) continue;  // unreachable or not yet processed
          new_idom = new_idom == -1 ? p : intersect(p, new_idom);
        }
        if (new_idom == -1) continue;
        auto it = idom.find(n);
        if (it == idom.end() || it->second != new_idom) {
          idom[n] = new_idom;
          changed = true;
        }
      }
    }
  }

  int intersect(int a, int b) {
    while (a != b) {
      while (rpo.at(a) > rpo.at(b)) a = idom.at(a);
      while (rpo.at(b) > rpo.at(a)) b = idom.at(b);
    }
    return a;
  }

  bool dominates(int a, int b) const {
    // Walk the idom chain from b up to the entry.
    for (;;) {
      if (a == b) return true;
      int up = idom.at(b);
      if (up == b) return false;  // reached entry
      b = up;
    }
  }
};

std::set<int> natural_loop_body(const Cfg& g, int from, int header) {
  std::set<int> body{header, from};
  std::vector<int> work;
  if (from != header) work.push_back(from);
  while (!work.empty()) {
    int n = work.back();
    work.pop_back();
    for (int p : g.pred.at(n)) {
      if (g.unreachable.count(p)) continue;
      if (body.insert(p).second) work.push_back(p);
    }
  }
  return body;
}

// Tarjan SCC over the reachable subgraph with the given edge filter.
std::vector<std::vector<int>> sccs(const Cfg& g,
                                   const std::set<std::pair<int, int>>& dropped) {
  std::map<int, int> index, low;
  std::set<int> on_stack;
  std::vector<int> stack;
  std::vector<std::vector<int>> out;
  int counter = 0;

  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (int w : g.succ.at(v)) {
      if (g.unreachable.count(w) || dropped.count({v, w})) continue;
      if (!index.count(w)) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> comp;
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.push_back(w);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };

  for (const CfgNode& n : g.nodes)
    if (!g.unreachable.count(n.id) && !index.count(n.id)) strongconnect(n.id);
  return out;
}

}  // namespace

std::vector<Loop> extract_loops(const Cfg& g) {
  Dominators dom(g);
  std::vector<Loop> loops;
  std::set<std::pair<int, int>> back_edges;

  for (const CfgEdge& e : g.edges) {
    if (g.unreachable.count(e.from) || g.unreachable.count(e.to)) continue;
    if (dom.dominates(e.to, e.from)) {
      back_edges.insert({e.from, e.to});
      Loop l;
      l.header = e.to;
      l.back_edge = {e.from, e.to};
      l.body = natural_loop_body(g, e.from, e.to);
      loops.push_back(std::move(l));
    }
  }

  // Residual cycles after removing the back edges are irreducible regions;
  // fold each nontrivial SCC into one flagged loop.
  for (const std::vector<int>& comp : sccs(g, back_edges)) {
    if (comp.size() < 2) continue;
    std::set<int> body(comp.begin(), comp.end());
    // Header: the smallest node entered from outside the component, if any.
    int header = comp.front();
    for (int n : comp) {
      bool entered = false;
      for (int p : g.pred.at(n))
        if (!body.count(p) && !g.unreachable.count(p)) entered = true;
      if (entered) {
        header = n;
        break;
      }
    }
    int from = -1;
    for (int p : g.pred.at(header))
      if (body.count(p) && (from == -1 || p < from)) from = p;
    Loop l;
    l.header = header;
    l.back_edge = {from, header};
    l.body = std::move(body);
    l.irreducible = true;
    loops.push_back(std::move(l));
  }

  std::sort(loops.begin(), loops.end(), [](const Loop& a, const Loop& b) {
    if (a.header != b.header) return a.header < b.header;
    return a.back_edge.first < b.back_edge.first;
  });
  for (std::size_t i = 0; i < loops.size(); ++i) loops[i].id = static_cast<int>(i) + 1;
  return loops;
}

RelationKind loop_relation(const Loop& a, const Loop& b) {
  const std::set<int>& x = a.body;
  const std::set<int>& y = b.body;
  if (x == y) return RelationKind::Equal;
  bool overlap = false;
  bool x_in_y = true;
  for (int n : x) {
    if (y.count(n))
      overlap = true;
    else
      x_in_y = false;
  }
  if (x_in_y) return RelationKind::Subset;
  bool y_in_x = true;
  for (int n : y)
    if (!x.count(n)) {
      y_in_x = false;
      break;
    }
  if (y_in_x) return RelationKind::Superset;
  return overlap ? RelationKind::Intersect : RelationKind::Disjoint;
}

const char* to_string(RelationKind k) {
  switch (k) {
    case RelationKind::Subset: return "subset";
    case RelationKind::Superset: return "superset";
    case RelationKind::Intersect: return "intersect";
    case RelationKind::Equal: return "equal";
    case RelationKind::Disjoint: return "disjoint";
  }
  return "?";
}

const std::set<int>* RelationGraph::body_of(int node) const {
  if (node < 0 || node >= static_cast<int>(bodies.size())) return nullptr;
  return &bodies[node];
}

RelationGraph relation_graph(const std::vector<Loop>& loops) {
  RelationGraph g;
  // Merge loops with identical bodies into one node.
  std::map<std::set<int>, std::vector<int>> groups;
  for (const Loop& l : loops) groups[l.body].push_back(l.id);
  std::vector<std::pair<std::set<int>, std::vector<int>>> merged(groups.begin(), groups.end());
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.second.begin(), a.second.end()) <
           *std::min_element(b.second.begin(), b.second.end());
  });
  for (auto& [body, ids] : merged) {
    std::sort(ids.begin(), ids.end());
    g.nodes.push_back(RelationNode{ids});
    g.bodies.push_back(body);
  }

  int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Loop a, b;
      a.body = g.bodies[i];
      b.body = g.bodies[j];
      switch (loop_relation(a, b)) {
        case RelationKind::Subset:
          g.edges.push_back({i, j, RelationEdgeKind::Subset});
          break;
        case RelationKind::Superset:
          g.edges.push_back({j, i, RelationEdgeKind::Subset});
          break;
        case RelationKind::Intersect:
          g.edges.push_back({i, j, RelationEdgeKind::Intersect});
          break;
        default:
          break;  // Disjoint: no edge; Equal: impossible after merging
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const RelationEdge& a, const RelationEdge& b) {
    if (a.a != b.a) return a.a < b.a;
    return a.b < b.b;
  });
  return g;
}

nlohmann::json cfg_to_json(const Cfg& g) {
  nlohmann::json j;
  j["entry"] = g.entry;
  j["nodes"] = nlohmann::json::array();
  for (const CfgNode& n : g.nodes) j["nodes"].push_back({{"id", n.id}, {"text", n.text}});
  j["edges"] = nlohmann::json::array();
  for (const CfgEdge& e : g.edges) j["edges"].push_back({{"from", e.from}, {"to", e.to}});
  return j;
}

Cfg cfg_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("entry") || !j.contains("nodes") || !j.contains("edges"))
    throw ValidationError("cfg document must contain entry, nodes and edges");
  if (!j["entry"].is_number_integer()) throw ValidationError("cfg entry must be an integer");
  std::vector<CfgNode> nodes;
  for (const auto& nj : j["nodes"]) {
    if (!nj.is_object() || !nj.contains("id") || !nj["id"].is_number_integer())
      throw ValidationError("cfg node missing integer id");
    CfgNode n;
    n.id = nj["id"].get<int>();
    if (nj.contains("text")) {
      if (!nj["text"].is_array()) throw ValidationError("cfg node text must be an array");
      for (const auto& t : nj["text"]) {
        if (!t.is_string()) throw ValidationError("cfg node text entries must be strings");
        n.text.push_back(t.get<std::string>());
      }
    }
    nodes.push_back(std::move(n));
  }
  std::vector<CfgEdge> edges;
  for (const auto& ej : j["edges"]) {
    if (!ej.is_object() || !ej.contains("from") || !ej.contains("to") ||
        !ej["from"].is_number_integer() || !ej["to"].is_number_integer())
      throw ValidationError("cfg edge must carry integer from/to");
    edges.push_back({ej["from"].get<int>(), ej["to"].get<int>()});
  }
  return build_cfg(std::move(nodes), std::move(edges), j["entry"].get<int>());
}

nlohmann::json loops_to_json(const std::vector<Loop>& loops) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Loop& l : loops) {
    nlohmann::json j;
    j["id"] = l.id;
    j["header"] = l.header;
    j["back_edge"] = {l.back_edge.first, l.back_edge.second};
    j["body"] = l.body;
    j["irreducible"] = l.irreducible;
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::json relation_graph_to_json(const RelationGraph& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const RelationNode& n : g.nodes) j["nodes"].push_back({{"loops", n.loop_ids}});
  j["edges"] = nlohmann::json::array();
  for (const RelationEdge& e : g.edges)
    j["edges"].push_back({{"a", e.a},
                          {"b", e.b},
                          {"kind", e.kind == RelationEdgeKind::Subset ? "subset" : "intersect"}});
  return j;
}

}  // namespace instmeter
