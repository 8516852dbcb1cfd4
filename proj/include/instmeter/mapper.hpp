#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "instmeter/cfg.hpp"
#include "instmeter/disasm.hpp"
#include "instmeter/srcfeat.hpp"

namespace instmeter {

// One structural candidate: a bijection over matched relation-graph nodes,
// expanded to (source loop id, disasm loop id) pairs sorted by source id.
struct CandidateMapping {
  std::vector<std::pair<int, int>> pairs;

  bool operator==(const CandidateMapping&) const = default;
  bool operator<(const CandidateMapping& o) const { return pairs < o.pairs; }
};

// Feature indices for the four similarity channels.
enum : int {
  kFeatFunctionName = 0,
  kFeatVariableName = 1,
  kFeatInteger = 2,
  kFeatComparator = 3,
  kFeatureCount = 4
};

// s[i][j]: similarity of source loop id i+1 and disasm loop id j+1.
struct SimilarityMatrix {
  std::vector<std::vector<double>> s;
};

struct WeightVector {
  std::array<double, kFeatureCount> w{};
};

struct MappingResult {
  std::string function;
  CandidateMapping best;
  double score = 0.0;       // scalarized score of `best` in the deciding batch
  bool ambiguous = false;   // tie survived every re-scalarization batch
  int trials_used = 0;      // weight draws consumed
  // Diagnostics: per matched pair, the four feature similarities.
  std::vector<std::array<double, kFeatureCount>> pair_features;
};

// Enumerates every maximal edge-label-preserving isomorphism between the two
// relation graphs (full bijections when the node counts agree), in
// deterministic lexicographic order. With `anchor_first`, the lowest source
// node is seeded onto the lowest disasm node, falling back to the unseeded
// search when that seed admits no isomorphism. Throws MatchError when nothing
// matches (structural divergence, e.g., loop unrolling).
std::vector<CandidateMapping> structural_match(const RelationGraph& src, const RelationGraph& bin,
                                               bool anchor_first = true);

// Multiset-Jaccard similarity of the chosen feature across every loop pair.
// For the comparator feature both sides are folded into the token space the
// instruction set can express.
SimilarityMatrix similarity_matrix(int feature, const std::vector<FeatureBundle>& src,
                                   const std::vector<FeatureBundle>& bin);

// Stateless 64-bit mixing function used to derive independent RNG streams.
std::uint64_t splitmix(std::uint64_t x);

// Uniform random point on the 4-simplex (normalized exponential draws),
// reproducible from (seed, trial).
WeightVector random_weights(std::uint64_t rng_seed, std::uint64_t trial_index);

// Scores every candidate under 100 random scalarizations and keeps the top
// one; persistent ties trigger fresh batches (up to 50) before the result is
// declared ambiguous and broken lexicographically.
MappingResult semantic_score(const std::vector<CandidateMapping>& candidates,
                             const std::array<SimilarityMatrix, kFeatureCount>& sims,
                             std::uint64_t rng_seed);

// Full pipeline over pre-built CFGs: extract loops on both sides, match
// structurally, then disambiguate semantically. `bin_node_instrs` carries the
// instructions of each disasm CFG node (indexed by node id).
MappingResult map_cfgs(const SrcFunction& src, const Cfg& bin_cfg,
                       const std::vector<std::vector<Instruction>>& bin_node_instrs,
                       const ArchSpec& arch, std::uint64_t seed);

MappingResult map_function(const SrcFunction& src, const BinFunction& bin, const ArchSpec& arch,
                           std::uint64_t seed);

nlohmann::json mapping_to_json(const MappingResult& r);

}  // namespace instmeter
