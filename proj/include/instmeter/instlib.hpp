#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "instmeter/disasm.hpp"
#include "instmeter/expr.hpp"
#include "instmeter/mapper.hpp"
#include "instmeter/srcfeat.hpp"
#include "json.hpp"

namespace instmeter {

// One node of a kernel's loop tree. Node 0 is the root (prologue/epilogue,
// trip 1); every other node is a mapped loop pair. Each instruction of the
// function is attributed to exactly one node.
struct ProfileNode {
  int id = 0;
  int parent = -1;   // -1 only for the root
  int src_loop = 0;  // 0 for the root
  int bin_loop = 0;
  std::string trip = "1";
  std::map<std::string, std::int64_t> hist;  // stripped mnemonic -> occurrences
};

struct KernelProfile {
  std::string name;
  std::vector<ProfileNode> nodes;  // node ids are indices
};

struct OperatorInstance {
  std::string op_type;
  std::map<std::string, std::int64_t> params;
};

// First-match dispatch: op_type plus a predicate over the operator params.
struct DispatchRule {
  enum class Pred { Always, AllEq, ExactlyOneEq };
  std::string op_type;
  Pred pred = Pred::Always;
  std::map<std::string, std::int64_t> tests;
  std::vector<std::string> kernels;
};

struct InstructionLibrary {
  std::string architecture;
  std::string tflm_version_tag;
  CpiTable cpi;
  std::map<std::string, KernelProfile> kernels;
  std::vector<DispatchRule> dispatch_rules;
  std::string input_hash;  // content hash of the inputs the library was built from
};

// Builds the loop tree for one kernel from a completed source/disassembly
// mapping. Every mapped source loop must have a trip expression.
KernelProfile build_profile(const SrcFunction& src, const BinFunction& bin,
                            const MappingResult& mapping, const ArchSpec& arch);

// Total cycles of one kernel invocation: sum over nodes and instruction
// classes of occurrences x cost x effective executions, where the effective
// execution count is the product of trip counts down the tree path.
std::int64_t kernel_cycles(const KernelProfile& kp, const CpiTable& cpi, const ParamEnv& env,
                           bool* clamped = nullptr);

// Kernels invoked by one operator, per the first matching rule.
std::vector<std::string> dispatch_operator(const InstructionLibrary& lib,
                                           const OperatorInstance& op);

struct OperatorCycles {
  std::string op_type;
  std::int64_t cycles = 0;
  std::vector<std::pair<std::string, std::int64_t>> kernels;  // (kernel, cycles)
};

struct ModelCycles {
  std::int64_t total = 0;
  std::vector<OperatorCycles> ops;  // input order preserved
};

ModelCycles model_cycles(const InstructionLibrary& lib,
                         const std::vector<OperatorInstance>& ops);

std::vector<DispatchRule> default_dispatch_rules();

nlohmann::json library_to_json(const InstructionLibrary& lib);
InstructionLibrary library_from_json(const nlohmann::json& j);

nlohmann::json model_cycles_to_json(const ModelCycles& mc);

// FNV-1a over bytes, hex string; used for the library's input hash.
std::string fnv1a_hex(const std::string& data);

}  // namespace instmeter
