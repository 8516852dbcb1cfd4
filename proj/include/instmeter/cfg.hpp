#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "instmeter/errors.hpp"
#include "json.hpp"

namespace instmeter {

struct CfgNode {
  int id = 0;
  std::vector<std::string> text;  // raw statement or instruction lines
};

struct CfgEdge {
  int from = 0;
  int to = 0;
};

// Directed control-flow graph, immutable once built. Unreachable nodes are
// retained and flagged rather than dropped.
struct Cfg {
  int entry = 0;
  std::vector<CfgNode> nodes;  // sorted by id
  std::vector<CfgEdge> edges;  // deduplicated, sorted by (from, to)
  std::set<int> unreachable;   // node ids not reachable from entry

  std::map<int, std::vector<int>> succ;  // sorted adjacency, every node present
  std::map<int, std::vector<int>> pred;

  const CfgNode* find(int id) const;
  bool has_node(int id) const { return succ.count(id) != 0; }
};

// Validates and assembles a Cfg: duplicate node ids, dangling edge endpoints,
// and a missing entry node are errors; parallel edges are deduplicated.
Cfg build_cfg(std::vector<CfgNode> nodes, std::vector<CfgEdge> edges, int entry);

// A loop discovered in a Cfg. Regular loops are the natural loops of dominator
// back edges; irreducible residual cycles come out as one loop per nontrivial
// strongly-connected component with `irreducible` set.
struct Loop {
  int id = 0;  // 1-based position in (header, back-edge source) order
  int header = 0;
  std::pair<int, int> back_edge{0, 0};  // (from, to == header)
  std::set<int> body;
  bool irreducible = false;
};

std::vector<Loop> extract_loops(const Cfg& g);

enum class RelationKind { Subset, Superset, Intersect, Equal, Disjoint };

// Exactly one kind holds for any pair of loop bodies. Subset/Superset are
// proper inclusions; Intersect means a nonempty overlap without containment.
RelationKind loop_relation(const Loop& a, const Loop& b);

const char* to_string(RelationKind k);

// Node of the loop-relation graph; loops with identical bodies are merged
// into one node carrying all their ids.
struct RelationNode {
  std::vector<int> loop_ids;  // sorted
};

enum class RelationEdgeKind { Subset, Intersect };

struct RelationEdge {
  int a = 0;  // node indices; Subset: body(a) strictly inside body(b)
  int b = 0;  // Intersect: symmetric, stored with a < b
  RelationEdgeKind kind = RelationEdgeKind::Intersect;
};

struct RelationGraph {
  std::vector<RelationNode> nodes;  // ordered by smallest loop id
  std::vector<RelationEdge> edges;  // sorted by (a, b)

  const std::set<int>* body_of(int node) const;  // representative body

  std::vector<std::set<int>> bodies;  // aligned with nodes
};

// Enumerates every loop pair; keeps Subset (directed) and Intersect
// (symmetric) edges, merging Equal loops first.
RelationGraph relation_graph(const std::vector<Loop>& loops);

// JSON interchange: {"entry": int, "nodes": [{"id": int, "text": [string]}],
// "edges": [{"from": int, "to": int}]}. Round trips exactly.
nlohmann::json cfg_to_json(const Cfg& g);
Cfg cfg_from_json(const nlohmann::json& j);

nlohmann::json loops_to_json(const std::vector<Loop>& loops);
nlohmann::json relation_graph_to_json(const RelationGraph& g);

}  // namespace instmeter
