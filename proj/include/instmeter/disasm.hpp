#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "instmeter/cfg.hpp"
#include "instmeter/errors.hpp"
#include "instmeter/features.hpp"
#include "json.hpp"

namespace instmeter {

struct Instruction {
  std::uint64_t addr = 0;
  std::string mnemonic;                // as printed, lowercased
  std::vector<std::string> operands;   // comma-split, trimmed
  std::string comment;                 // text after ';', trimmed
};

struct BinFunction {
  std::string symbol;
  std::uint64_t start = 0;
  std::vector<Instruction> instructions;  // addresses strictly increasing
};

struct ParsedListing {
  std::vector<BinFunction> functions;
  int skipped_lines = 0;  // non-matching, non-blank lines
};

// Parses an objdump-style listing:
//   HEXADDR <symbol>:
//      addr:\t enc enc \t mnemonic \t operands ; comment
// Lines matching neither form are skipped and counted.
ParsedListing parse_disasm(const std::string& text);

// Renders functions back to listing form (addresses, mnemonics, operands,
// comments); parsing the result reproduces the same structures.
std::string to_listing(const BinFunction& fn);

// Removes trailing width/condition suffixes (.n, .w) before table lookups.
std::string strip_suffix(const std::string& mnemonic);

// Per-architecture mnemonic roles. Conditional branches map to the canonical
// comparator of their lookup-table row; both the identical and the counter
// instruction of a row land on the same token.
struct ArchSpec {
  std::string name;
  std::map<std::string, CmpOp> cond_branch;  // comparator-bearing conditional branches
  std::set<std::string> bare_cond_branch;    // conditional, no comparator family (bmi, ...)
  std::set<std::string> uncond_branch;
  std::set<std::string> call;
  std::set<std::string> ret;
  std::map<std::string, CmpOp> shift;
  std::map<std::string, CmpOp> bit_logic;
  std::set<std::string> compute;  // known ALU / memory mnemonics

  bool is_branch(const std::string& stripped) const;

  static const ArchSpec& cortex_m();
  static const ArchSpec& riscv();
  static const ArchSpec& by_name(const std::string& name);  // ValidationError if unknown
};

struct CpiEntry {
  double not_taken = 1.0;
  std::optional<double> taken;  // preferred as the single per-type cost when present
};

// Cycles-per-instruction table keyed by stripped mnemonic.
struct CpiTable {
  std::string architecture;
  double default_cycles = 1.0;
  std::map<std::string, CpiEntry> entries;

  double cost(const std::string& stripped_mnemonic) const;

  // {"architecture": ..., "default": x, "entries": {"add": 1,
  //  "blt": {"not_taken": 1, "taken": 2}, ...}}; every value must be > 0.
  static CpiTable from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  static CpiTable builtin(const std::string& arch_name);  // bundled defaults
};

struct InstrClass {
  enum class Kind { CompareBranch, UncondBranch, Call, Shift, BitLogic, Compute, Other };
  Kind kind = Kind::Other;
  CmpOp op = CmpOp::Lt;  // meaningful for CompareBranch / Shift / BitLogic
};

// Classifies one instruction and prices it from the CPI table. Unknown
// mnemonics fall to Other at the default cost.
std::pair<InstrClass, double> classify_instruction(const Instruction& ins, const ArchSpec& arch,
                                                   const CpiTable& cpi);

// Basic-block CFG of one function. Node ids are block indices in address
// order; node text carries the rendered instruction lines.
struct BinCfg {
  Cfg cfg;
  std::vector<std::vector<std::size_t>> block_instrs;  // node id -> instruction indices
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dropped_edges;  // (branch addr, target)
};

BinCfg build_bin_cfg(const BinFunction& fn, const ArchSpec& arch);

// Semantic features of an instruction sequence: callee names from call sites,
// identifier-like comment annotations, immediate literals, canonical
// comparators.
FeatureBundle instruction_features(const std::vector<Instruction>& ins, const ArchSpec& arch);

// The same, gathered over the blocks of one loop.
FeatureBundle extract_bin_semantics(const BinFunction& fn, const BinCfg& bc, const Loop& loop,
                                    const ArchSpec& arch);

}  // namespace instmeter
