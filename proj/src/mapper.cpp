#include "instmeter/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace instmeter {

namespace {

enum class Label : unsigned char { None, SubOut, SubIn, Intersect };

struct LabeledGraph {
  int n = 0;
  std::vector<Label> adj;            // n*n
  std::vector<int> group_size;       // merged loop ids per node
  std::vector<std::vector<int>> ids; // loop ids per node

  Label at(int i, int j) const { return adj[static_cast<std::size_t>(i) * n + j]; }
};

LabeledGraph labeled(const RelationGraph& g) {
  LabeledGraph lg;
  lg.n = static_cast<int>(g.nodes.size());
  lg.adj.assign(static_cast<std::size_t>(lg.n) * lg.n, Label::None);
  for (const RelationNode& node : g.nodes) {
    lg.group_size.push_back(static_cast<int>(node.loop_ids.size()));
    lg.ids.push_back(node.loop_ids);
  }
  for (const RelationEdge& e : g.edges) {
    if (e.kind == RelationEdgeKind::Subset) {
      lg.adj[static_cast<std::size_t>(e.a) * lg.n + e.b] = Label::SubOut;
      lg.adj[static_cast<std::size_t>(e.b) * lg.n + e.a] = Label::SubIn;
    } else {
      lg.adj[static_cast<std::size_t>(e.a) * lg.n + e.b] = Label::Intersect;
      lg.adj[static_cast<std::size_t>(e.b) * lg.n + e.a] = Label::Intersect;
    }
  }
  return lg;
}

// Depth-first enumeration of injective, induced, label-preserving maps of
// every `small` node into `large`. Candidates are tried in ascending order,
// so complete mappings come out lexicographically.
void enumerate(const LabeledGraph& small, const LabeledGraph& large, int depth,
               std::vector<int>& map, std::vector<char>& used, int anchor_to,
               std::vector<std::vector<int>>& out) {
  if (depth == small.n) {
    out.push_back(map);
    return;
  }
  for (int j = 0; j < large.n; ++j) {
    if (used[j]) continue;
    if (depth == 0 && anchor_to >= 0 && j != anchor_to) continue;
    if (small.group_size[depth] != large.group_size[j]) continue;
    bool ok = true;
    for (int k = 0; k < depth && ok; ++k)
      if (small.at(depth, k) != large.at(j, map[k]) || small.at(k, depth) != large.at(map[k], j))
        ok = false;
    if (!ok) continue;
    map[depth] = j;
    used[j] = 1;
    enumerate(small, large, depth + 1, map, used, anchor_to, out);
    used[j] = 0;
    map[depth] = -1;
  }
}

std::vector<std::vector<int>> run_search(const LabeledGraph& small, const LabeledGraph& large,
                                         int anchor_to) {
  std::vector<std::vector<int>> out;
  std::vector<int> map(small.n, -1);
  std::vector<char> used(large.n, 0);
  enumerate(small, large, 0, map, used, anchor_to, out);
  return out;
}

}  // namespace

std::vector<CandidateMapping> structural_match(const RelationGraph& src, const RelationGraph& bin,
                                               bool anchor_first) {
  if (src.nodes.empty() || bin.nodes.empty())
    throw MatchError("structural matching requires loops on both sides");

  LabeledGraph s = labeled(src);
  LabeledGraph b = labeled(bin);
  bool src_small = s.n <= b.n;
  const LabeledGraph& small = src_small ? s : b;
  const LabeledGraph& large = src_small ? b : s;

  std::vector<std::vector<int>> maps;
  if (anchor_first) {
    maps = run_search(small, large, 0);  // lowest node onto lowest node
    if (maps.empty()) maps = run_search(small, large, -1);
  } else {
    maps = run_search(small, large, -1);
  }
  if (maps.empty())
    throw MatchError(
        "no structural isomorphism between source and disassembly loop graphs "
        "(structural divergence, e.g., loop unrolling)");

  std::vector<CandidateMapping> out;
  for (const std::vector<int>& m : maps) {
    CandidateMapping c;
    for (int i = 0; i < small.n; ++i) {
      const std::vector<int>& a_ids = small.ids[i];
      const std::vector<int>& b_ids = large.ids[m[i]];
      for (std::size_t k = 0; k < a_ids.size(); ++k) {
        if (src_small)
          c.pairs.emplace_back(a_ids[k], b_ids[k]);
        else
          c.pairs.emplace_back(b_ids[k], a_ids[k]);
      }
    }
    std::sort(c.pairs.begin(), c.pairs.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SimilarityMatrix similarity_matrix(int feature, const std::vector<FeatureBundle>& src,
                                   const std::vector<FeatureBundle>& bin) {
  SimilarityMatrix m;
  m.s.assign(src.size(), std::vector<double>(bin.size(), 0.0));

  auto collapsed = [](const FeatureBundle& b) {
    std::map<std::string, int> out;
    for (const auto& [tok, n] : b.comparators) out[collapse_token(tok)] += n;
    return out;
  };

  std::vector<std::map<std::string, int>> sc, bc;
  if (feature == kFeatComparator) {
    for (const FeatureBundle& b : src) sc.push_back(collapsed(b));
    for (const FeatureBundle& b : bin) bc.push_back(collapsed(b));
  }

  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < bin.size(); ++j) {
      switch (feature) {
        case kFeatFunctionName:
          m.s[i][j] = multiset_jaccard(src[i].function_names, bin[j].function_names);
          break;
        case kFeatVariableName:
          m.s[i][j] = multiset_jaccard(src[i].variable_names, bin[j].variable_names);
          break;
        case kFeatInteger:
          m.s[i][j] = multiset_jaccard(src[i].integers, bin[j].integers);
          break;
        case kFeatComparator:
          m.s[i][j] = multiset_jaccard(sc[i], bc[j]);
          break;
        default:
          throw Error("unknown feature index " + std::to_string(feature));
      }
    }
  }
  return m;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

WeightVector random_weights(std::uint64_t rng_seed, std::uint64_t trial_index) {
  std::mt19937_64 rng(splitmix(rng_seed ^ splitmix(trial_index)));
  WeightVector wv;
  double sum = 0.0;
  for (int k = 0; k < kFeatureCount; ++k) {
    // u in (0, 1]; hand-rolled so the stream is identical across platforms.
    double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
    wv.w[k] = -std::log(u);
    sum += wv.w[k];
  }
  if (sum <= 0.0) {
    for (int k = 0; k < kFeatureCount; ++k) wv.w[k] = 0.25;
    return wv;
  }
  for (int k = 0; k < kFeatureCount; ++k) wv.w[k] /= sum;
  return wv;
}

MappingResult semantic_score(const std::vector<CandidateMapping>& candidates,
                             const std::array<SimilarityMatrix, kFeatureCount>& sims,
                             std::uint64_t rng_seed) {
  if (candidates.empty()) throw MatchError("semantic scoring requires at least one candidate");

  auto sim_at = [&](int f, int src_id, int bin_id) {
    return sims[f].s[static_cast<std::size_t>(src_id - 1)][static_cast<std::size_t>(bin_id - 1)];
  };

  // Weights enter linearly, so per-candidate feature totals are sufficient.
  std::vector<std::array<double, kFeatureCount>> totals(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    totals[c].fill(0.0);
    for (const auto& [i, j] : candidates[c].pairs)
      for (int f = 0; f < kFeatureCount; ++f) totals[c][f] += sim_at(f, i, j);
  }

  constexpr int kBatch = 100;
  constexpr int kMaxBatches = 50;

  MappingResult res;
  std::vector<std::size_t> tied;
  std::vector<double> scores(candidates.size());

  for (int batch = 0; batch < kMaxBatches; ++batch) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (int r = 0; r < kBatch; ++r) {
      WeightVector wv =
          random_weights(rng_seed, static_cast<std::uint64_t>(batch) * kBatch + r);
      for (std::size_t c = 0; c < candidates.size(); ++c)
        for (int f = 0; f < kFeatureCount; ++f) scores[c] += wv.w[f] * totals[c][f];
    }
    double top = *std::max_element(scores.begin(), scores.end());
    double eps = 1e-9 * std::max(1.0, std::fabs(top));
    tied.clear();
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (scores[c] >= top - eps) tied.push_back(c);

    res.trials_used = (batch + 1) * kBatch;
    if (tied.size() == 1) {
      res.best = candidates[tied.front()];
      res.score = scores[tied.front()];
      res.ambiguous = false;
      break;
    }
    if (batch == kMaxBatches - 1) {
      // Persistent tie: candidates are pre-sorted, the first tied one is the
      // lexicographic choice.
      res.best = candidates[tied.front()];
      res.score = scores[tied.front()];
      res.ambiguous = true;
    }
  }

  for (const auto& [i, j] : res.best.pairs) {
    std::array<double, kFeatureCount> fs{};
    for (int f = 0; f < kFeatureCount; ++f) fs[f] = sim_at(f, i, j);
    res.pair_features.push_back(fs);
  }
  return res;
}

MappingResult map_cfgs(const SrcFunction& src, const Cfg& bin_cfg,
                       const std::vector<std::vector<Instruction>>& bin_node_instrs,
                       const ArchSpec& arch, std::uint64_t seed) {
  std::vector<Loop> src_loops = extract_loops(src.cfg);
  std::vector<Loop> bin_loops = extract_loops(bin_cfg);

  MappingResult res;
  res.function = src.name;
  if (src_loops.empty() && bin_loops.empty()) return res;  // nothing to map
  if (src_loops.size() != bin_loops.size())
    throw MatchError("loop count mismatch in " + src.name + ": source has " +
                     std::to_string(src_loops.size()) + ", disassembly has " +
                     std::to_string(bin_loops.size()));

  std::vector<CandidateMapping> candidates =
      structural_match(relation_graph(src_loops), relation_graph(bin_loops));

  std::vector<FeatureBundle> src_bundles, bin_bundles;
  for (const Loop& l : src_loops) src_bundles.push_back(extract_src_semantics(src, l));
  for (const Loop& l : bin_loops) {
    std::vector<Instruction> ins;
    for (int node : l.body)
      if (node >= 0 && node < static_cast<int>(bin_node_instrs.size()))
        for (const Instruction& x : bin_node_instrs[node]) ins.push_back(x);
    bin_bundles.push_back(instruction_features(ins, arch));
  }

  std::array<SimilarityMatrix, kFeatureCount> sims;
  for (int f = 0; f < kFeatureCount; ++f)
    sims[f] = similarity_matrix(f, src_bundles, bin_bundles);

  MappingResult scored = semantic_score(candidates, sims, seed);
  scored.function = src.name;
  return scored;
}

MappingResult map_function(const SrcFunction& src, const BinFunction& bin, const ArchSpec& arch,
                           std::uint64_t seed) {
  BinCfg bc = build_bin_cfg(bin, arch);
  std::vector<std::vector<Instruction>> node_instrs(bc.block_instrs.size());
  for (std::size_t b = 0; b < bc.block_instrs.size(); ++b)
    for (std::size_t idx : bc.block_instrs[b])
      node_instrs[b].push_back(bin.instructions[idx]);
  return map_cfgs(src, bc.cfg, node_instrs, arch, seed);
}

nlohmann::json mapping_to_json(const MappingResult& r) {
  nlohmann::json j;
  j["function"] = r.function;
  j["pairs"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.best.pairs.size(); ++k) {
    const auto& [src_id, bin_id] = r.best.pairs[k];
    // Per-pair score: plain sum of the four feature similarities.
    double s = 0.0;
    if (k < r.pair_features.size())
      for (int f = 0; f < kFeatureCount; ++f) s += r.pair_features[k][f];
    j["pairs"].push_back({{"src", src_id}, {"bin", bin_id}, {"score", s}});
  }
  j["ambiguous"] = r.ambiguous;
  return j;
}

}  // namespace instmeter
