#include "instmeter/instlib.hpp"

#include <algorithm>
#include <cmath>

namespace instmeter {

KernelProfile build_profile(const SrcFunction& src, const BinFunction& bin,
                            const MappingResult& mapping, const ArchSpec& arch) {
  KernelProfile kp;
  kp.name = mapping.function.empty() ? src.name : mapping.function;

  BinCfg bc = build_bin_cfg(bin, arch);
  std::vector<Loop> src_loops = extract_loops(src.cfg);
  std::vector<Loop> bin_loops = extract_loops(bc.cfg);

  auto src_by_id = [&](int id) -> const Loop& { return src_loops[id - 1]; };
  auto bin_by_id = [&](int id) -> const Loop& { return bin_loops[id - 1]; };

  kp.nodes.push_back(ProfileNode{});  // root

  // One tree node per mapped pair, ordered by disasm loop id.
  std::vector<std::pair<int, int>> pairs = mapping.best.pairs;  // (src, bin)
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });

  std::map<int, int> node_of_bin_loop;
  for (const auto& [src_id, bin_id] : pairs) {
    const Loop& sl = src_by_id(src_id);
    auto it = src.trip_exprs.find(sl.header);
    if (it == src.trip_exprs.end())
      throw DataError("kernel '" + kp.name + "': mapped source loop " +
                      std::to_string(src_id) + " has no trip expression");
    ProfileNode n;
    n.id = static_cast<int>(kp.nodes.size());
    n.src_loop = src_id;
    n.bin_loop = bin_id;
    n.trip = it->second;
    node_of_bin_loop[bin_id] = n.id;
    kp.nodes.push_back(std::move(n));
  }

  // Parent: the innermost enclosing mapped loop on the disasm side — the
  // containing loop with the smallest body (ties by id). Root otherwise.
  auto containing = [&](const std::set<int>& needle, int self_id) {
    int best = -1;
    std::size_t best_size = 0;
    for (const auto& [bin_id, node_id] : node_of_bin_loop) {
      if (bin_id == self_id) continue;
      const std::set<int>& body = bin_by_id(bin_id).body;
      bool inside = std::includes(body.begin(), body.end(), needle.begin(), needle.end());
      if (!inside || body.size() <= needle.size()) continue;
      if (best == -1 || body.size() < best_size) {
        best = node_id;
        best_size = body.size();
      }
    }
    return best;
  };
  for (const auto& [bin_id, node_id] : node_of_bin_loop) {
    int p = containing(bin_by_id(bin_id).body, bin_id);
    kp.nodes[node_id].parent = p == -1 ? 0 : p;
  }

  // Attribute every instruction to its innermost containing mapped loop:
  // smallest body, then smallest id, among loops whose body holds its block.
  for (std::size_t block = 0; block < bc.block_instrs.size(); ++block) {
    int node_id = 0;
    std::size_t best_size = 0;
    for (const auto& [bin_id, nid] : node_of_bin_loop) {
      const Loop& l = bin_by_id(bin_id);
      if (!l.body.count(static_cast<int>(block))) continue;
      if (node_id == 0 || l.body.size() < best_size) {
        node_id = nid;
        best_size = l.body.size();
      }
    }
    for (std::size_t idx : bc.block_instrs[block])
      kp.nodes[node_id].hist[strip_suffix(bin.instructions[idx].mnemonic)]++;
  }
  return kp;
}

std::int64_t kernel_cycles(const KernelProfile& kp, const CpiTable& cpi, const ParamEnv& env,
                           bool* clamped) {
  if (clamped) *clamped = false;
  std::vector<std::vector<int>> children(kp.nodes.size());
  for (const ProfileNode& n : kp.nodes)
    if (n.parent >= 0) children[n.parent].push_back(n.id);

  double total = 0.0;
  // Depth-first with the running product of trip counts.
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    auto [id, mult] = stack.back();
    stack.pop_back();
    const ProfileNode& n = kp.nodes[id];
    bool clip = false;
    double trips = static_cast<double>(eval_expr(parse_expr(n.trip), env, &clip));
    if (clip && clamped) *clamped = true;
    double eff = mult * trips;
    for (const auto& [mnemonic, count] : n.hist)
      total += static_cast<double>(count) * cpi.cost(mnemonic) * eff;
    for (int c : children[id]) stack.push_back({c, eff});
  }
  return std::llround(total);
}

std::vector<std::string> dispatch_operator(const InstructionLibrary& lib,
                                           const OperatorInstance& op) {
  for (const DispatchRule& r : lib.dispatch_rules) {
    if (r.op_type != op.op_type) continue;
    bool hit = false;
    switch (r.pred) {
      case DispatchRule::Pred::Always:
        hit = true;
        break;
      case DispatchRule::Pred::AllEq: {
        hit = true;
        for (const auto& [k, v] : r.tests) {
          auto it = op.params.find(k);
          if (it == op.params.end() || it->second != v) hit = false;
        }
        break;
      }
      case DispatchRule::Pred::ExactlyOneEq: {
        int count = 0;
        for (const auto& [k, v] : r.tests) {
          auto it = op.params.find(k);
          if (it != op.params.end() && it->second == v) ++count;
        }
        hit = count == 1;
        break;
      }
    }
    if (hit) return r.kernels;
  }
  throw DataError("no dispatch rule matches operator '" + op.op_type + "'");
}

ModelCycles model_cycles(const InstructionLibrary& lib,
                         const std::vector<OperatorInstance>& ops) {
  ModelCycles mc;
  for (const OperatorInstance& op : ops) {
    OperatorCycles oc;
    oc.op_type = op.op_type;
    ParamEnv env(op.params.begin(), op.params.end());
    for (const std::string& kname : dispatch_operator(lib, op)) {
      auto it = lib.kernels.find(kname);
      if (it == lib.kernels.end())
        throw DataError("operator '" + op.op_type + "' dispatches to kernel '" + kname +
                        "' which is not in the library");
      std::int64_t c = kernel_cycles(it->second, lib.cpi, env);
      oc.kernels.emplace_back(kname, c);
      oc.cycles += c;
    }
    mc.total += oc.cycles;
    mc.ops.push_back(std::move(oc));
  }
  return mc;
}

std::vector<DispatchRule> default_dispatch_rules() {
  using P = DispatchRule::Pred;
  std::vector<DispatchRule> r;
  r.push_back({"Conv2D", P::AllEq, {{"kh", 1}, {"kw", 1}}, {"arm_convolve_1x1_s8_fast"}});
  r.push_back({"Conv2D", P::ExactlyOneEq, {{"kh", 1}, {"kw", 1}}, {"arm_convolve_1_x_n_s8"}});
  r.push_back({"Conv2D", P::Always, {}, {"arm_convolve_s8"}});
  r.push_back({"DepthConv2D", P::AllEq, {{"kh", 3}, {"kw", 3}}, {"arm_depthwise_conv_3x3"}});
  r.push_back({"DepthConv2D", P::Always, {}, {"arm_depthwise_conv_s8"}});
  r.push_back({"FullyConnected", P::Always, {}, {"arm_fully_connected_s8"}});
  r.push_back({"MaxPool2D", P::Always, {}, {"arm_max_pool_s8"}});
  r.push_back({"AvgPool2D", P::Always, {}, {"arm_avgpool_s8"}});
  r.push_back({"ReLU", P::Always, {}, {"ReluQuantized"}});
  r.push_back({"Add", P::Always, {}, {"arm_elementwise_add_s8"}});
  r.push_back({"Mul", P::Always, {}, {"arm_elementwise_mul_s8"}});
  r.push_back({"Softmax", P::Always, {}, {"arm_softmax_s8"}});
  r.push_back({"Reshape", P::Always, {}, {"reshapeOutput"}});
  return r;
}

namespace {

const char* pred_name(DispatchRule::Pred p) {
  switch (p) {
    case DispatchRule::Pred::Always: return "always";
    case DispatchRule::Pred::AllEq: return "all_eq";
    case DispatchRule::Pred::ExactlyOneEq: return "one_eq";
  }
  return "?";
}

DispatchRule::Pred pred_from(const std::string& s) {
  if (s == "always") return DispatchRule::Pred::Always;
  if (s == "all_eq") return DispatchRule::Pred::AllEq;
  if (s == "one_eq") return DispatchRule::Pred::ExactlyOneEq;
  throw ValidationError("unknown dispatch predicate '" + s + "'");
}

}  // namespace

nlohmann::json library_to_json(const InstructionLibrary& lib) {
  nlohmann::json j;
  j["architecture"] = lib.architecture;
  j["tflm_version_tag"] = lib.tflm_version_tag;
  j["cpi"] = lib.cpi.to_json();
  j["input_hash"] = lib.input_hash;
  j["dispatch_rules"] = nlohmann::json::array();
  for (const DispatchRule& r : lib.dispatch_rules) {
    nlohmann::json rj;
    rj["op"] = r.op_type;
    rj["when"] = {{"kind", pred_name(r.pred)}};
    if (!r.tests.empty()) {
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [k, v] : r.tests) t[k] = v;
      rj["when"]["tests"] = std::move(t);
    }
    rj["kernels"] = r.kernels;
    j["dispatch_rules"].push_back(std::move(rj));
  }
  j["kernels"] = nlohmann::json::object();
  for (const auto& [name, kp] : lib.kernels) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const ProfileNode& n : kp.nodes) {
      nlohmann::json nj;
      nj["id"] = n.id;
      nj["parent"] = n.parent;
      nj["src_loop"] = n.src_loop;
      nj["bin_loop"] = n.bin_loop;
      nj["trip"] = n.trip;
      nj["hist"] = nlohmann::json::object();
      for (const auto& [m, c] : n.hist) nj["hist"][m] = c;
      nodes.push_back(std::move(nj));
    }
    j["kernels"][name] = {{"nodes", std::move(nodes)}};
  }
  return j;
}

InstructionLibrary library_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("library document must be an object");
  InstructionLibrary lib;
  lib.architecture = j.value("architecture", "");
  lib.tflm_version_tag = j.value("tflm_version_tag", "");
  lib.input_hash = j.value("input_hash", "");
  if (j.contains("cpi")) lib.cpi = CpiTable::from_json(j["cpi"]);
  if (j.contains("dispatch_rules")) {
    for (const auto& rj : j["dispatch_rules"]) {
      DispatchRule r;
      r.op_type = rj.at("op").get<std::string>();
      r.pred = pred_from(rj.at("when").at("kind").get<std::string>());
      if (rj.at("when").contains("tests"))
        for (const auto& [k, v] : rj["when"]["tests"].items())
          r.tests[k] = v.get<std::int64_t>();
      r.kernels = rj.at("kernels").get<std::vector<std::string>>();
      lib.dispatch_rules.push_back(std::move(r));
    }
  }
  if (j.contains("kernels")) {
    for (const auto& [name, kj] : j["kernels"].items()) {
      KernelProfile kp;
      kp.name = name;
      for (const auto& nj : kj.at("nodes")) {
        ProfileNode n;
        n.id = nj.at("id").get<int>();
        n.parent = nj.at("parent").get<int>();
        n.src_loop = nj.value("src_loop", 0);
        n.bin_loop = nj.value("bin_loop", 0);
        n.trip = nj.at("trip").get<std::string>();
        if (nj.contains("hist"))
          for (const auto& [m, c] : nj["hist"].items()) n.hist[m] = c.get<std::int64_t>();
        kp.nodes.push_back(std::move(n));
      }
      if (kp.nodes.empty() || kp.nodes[0].parent != -1)
        throw ValidationError("kernel '" + name + "' must start with a root node");
      lib.kernels[name] = std::move(kp);
    }
  }
  return lib;
}

nlohmann::json model_cycles_to_json(const ModelCycles& mc) {
  nlohmann::json j;
  j["total_cycles"] = mc.total;
  j["operators"] = nlohmann::json::array();
  for (const OperatorCycles& oc : mc.ops) {
    nlohmann::json oj;
    oj["op"] = oc.op_type;
    oj["cycles"] = oc.cycles;
    oj["kernels"] = nlohmann::json::array();
    for (const auto& [k, c] : oc.kernels) oj["kernels"].push_back({{"kernel", k}, {"cycles", c}});
    j["operators"].push_back(std::move(oj));
  }
  return j;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace instmeter
