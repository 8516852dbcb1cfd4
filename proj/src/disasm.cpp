#include "instmeter/disasm.hpp"

#include <algorithm>
#include <cctype>

namespace instmeter {

namespace {

bool is_hex_str(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isxdigit(static_cast<unsigned char>(c)) ||
        (std::isalpha(static_cast<unsigned char>(c)) && std::isupper(static_cast<unsigned char>(c))))
      return false;
  return true;
}

bool is_encoding_word(const std::string& s) {
  return (s.size() == 4 || s.size() == 8) && is_hex_str(s);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> whitespace_split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

// Splits on commas outside (), [], {}, <>.
std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[' || c == '{' || c == '<') ++depth;
    if (c == ')' || c == ']' || c == '}' || c == '>') --depth;
    if (c == ',' && depth == 0) {
      std::string t = trim(cur);
      if (!t.empty()) out.push_back(std::move(t));
      cur.clear();
    } else {
      cur += c;
    }
  }
  std::string t = trim(cur);
  if (!t.empty()) out.push_back(std::move(t));
  return out;
}

}  // namespace

std::string strip_suffix(const std::string& mnemonic) {
  if (mnemonic.size() > 2) {
    std::string tail = mnemonic.substr(mnemonic.size() - 2);
    if (tail == ".n" || tail == ".w") return mnemonic.substr(0, mnemonic.size() - 2);
  }
  return mnemonic;
}

std::optional<Instruction> parse_instruction_line(const std::string& raw) {
  std::string line = trim(raw);
  if (line.empty()) return std::nullopt;
  std::size_t colon = line.find(':');
  if (colon == std::string::npos || colon == 0) return std::nullopt;
  std::string addr_tok = line.substr(0, colon);
  if (!is_hex_str(addr_tok)) return std::nullopt;
  if (addr_tok.size() > 16) throw DisasmError("address too wide: " + addr_tok);

  Instruction ins;
  ins.addr = std::stoull(addr_tok, nullptr, 16);

  std::string rest = line.substr(colon + 1);
  std::size_t semi = rest.find(';');
  if (semi != std::string::npos) {
    ins.comment = trim(rest.substr(semi + 1));
    rest = rest.substr(0, semi);
  }
  std::vector<std::string> toks = whitespace_split(rest);
  if (toks.empty()) return std::nullopt;

  std::size_t i = 0;
  while (i + 1 < toks.size() && is_encoding_word(toks[i])) ++i;
  ins.mnemonic = lower(toks[i]);
  std::string ops;
  for (std::size_t k = i + 1; k < toks.size(); ++k) {
    if (!ops.empty()) ops += " ";
    ops += toks[k];
  }
  ins.operands = split_operands(ops);
  return ins;
}

ParsedListing parse_disasm(const std::string& text) {
  ParsedListing out;
  BinFunction* cur = nullptr;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;

    std::string t = trim(line);
    if (t.empty()) continue;

    // Function header: ADDR <symbol>:
    if (t.size() > 4 && t.back() == ':' && t[t.size() - 2] == '>') {
      std::size_t lt = t.find(" <");
      if (lt != std::string::npos && is_hex_str(t.substr(0, lt))) {
        std::string sym = t.substr(lt + 2, t.size() - lt - 4);
        if (!sym.empty()) {
          out.functions.push_back(BinFunction{});
          cur = &out.functions.back();
          cur->symbol = sym;
          cur->start = std::stoull(t.substr(0, lt), nullptr, 16);
          continue;
        }
      }
    }

    std::optional<Instruction> ins = parse_instruction_line(line);
    if (!ins || !cur) {
      ++out.skipped_lines;
      continue;
    }
    if (!cur->instructions.empty() && ins->addr <= cur->instructions.back().addr)
      throw DisasmError("nonmonotonic address " + std::to_string(ins->addr) + " in <" +
                        cur->symbol + ">");
    cur->instructions.push_back(std::move(*ins));
  }
  return out;
}

namespace {

std::string format_addr(std::uint64_t a) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(a));
  return buf;
}

std::string format_instruction(const Instruction& ins) {
  std::string line = " " + format_addr(ins.addr) + ":\t" + ins.mnemonic;
  for (std::size_t i = 0; i < ins.operands.size(); ++i)
    line += (i == 0 ? "\t" : ", ") + ins.operands[i];
  if (!ins.comment.empty()) line += "\t; " + ins.comment;
  return line;
}

}  // namespace

std::string to_listing(const BinFunction& fn) {
  std::string out = format_addr(fn.start) + " <" + fn.symbol + ">:\n";
  for (const Instruction& ins : fn.instructions) out += format_instruction(ins) + "\n";
  return out;
}

bool ArchSpec::is_branch(const std::string& stripped) const {
  return cond_branch.count(stripped) || bare_cond_branch.count(stripped) ||
         uncond_branch.count(stripped) || call.count(stripped) || ret.count(stripped);
}

const ArchSpec& ArchSpec::cortex_m() {
  static const ArchSpec spec = [] {
    ArchSpec a;
    a.name = "cortex-m";
    a.cond_branch = {
        {"blt", CmpOp::Lt}, {"bge", CmpOp::Lt},  // identical / counter pair
        {"bgt", CmpOp::Gt}, {"ble", CmpOp::Gt},
        {"beq", CmpOp::Eq}, {"bne", CmpOp::Ne},
        {"bhi", CmpOp::Gt}, {"bls", CmpOp::Gt},  // unsigned family
        {"bcc", CmpOp::Lt}, {"bcs", CmpOp::Lt},
        {"blo", CmpOp::Lt}, {"bhs", CmpOp::Lt},
        {"cbz", CmpOp::Eq}, {"cbnz", CmpOp::Ne},
    };
    a.bare_cond_branch = {"bmi", "bpl", "bvs", "bvc"};
    a.uncond_branch = {"b"};
    a.call = {"bl", "blx"};
    a.ret = {"bx"};
    a.shift = {{"lsl", CmpOp::Shl}, {"lsls", CmpOp::Shl},
               {"asr", CmpOp::Shr}, {"asrs", CmpOp::Shr},
               {"lsr", CmpOp::Shr}, {"lsrs", CmpOp::Shr}};
    a.bit_logic = {{"and", CmpOp::And}, {"ands", CmpOp::And},
                   {"orr", CmpOp::Or},  {"orrs", CmpOp::Or}};
    a.compute = {"mov",  "movs", "movw", "movt",  "mvn",   "add",   "adds",  "adc",   "adcs",
                 "sub",  "subs", "sbc",  "sbcs",  "rsb",   "rsbs",  "mul",   "muls",  "mla",
                 "mls",  "smull", "umull", "smlabb", "smlal", "sxtb", "sxth", "uxtb",  "uxth",
                 "cmp",  "cmn",  "tst",  "teq",   "ldr",   "ldrb",  "ldrsb", "ldrh",  "ldrsh",
                 "str",  "strb", "strh", "ldm",   "ldmia", "stm",   "stmia", "push",  "pop",
                 "nop",  "sdiv", "udiv", "eor",   "eors",  "bic",   "bics",  "neg",   "rev",
                 "clz",  "it",   "ite",  "itt",   "ssat",  "usat"};
    return a;
  }();
  return spec;
}

const ArchSpec& ArchSpec::riscv() {
  static const ArchSpec spec = [] {
    ArchSpec a;
    a.name = "riscv";
    a.cond_branch = {
        {"blt", CmpOp::Lt},  {"bge", CmpOp::Lt},  {"bltu", CmpOp::Lt}, {"bgeu", CmpOp::Lt},
        {"bgt", CmpOp::Gt},  {"ble", CmpOp::Gt},  {"bgtu", CmpOp::Gt}, {"bleu", CmpOp::Gt},
        {"beq", CmpOp::Eq},  {"bne", CmpOp::Ne},  {"beqz", CmpOp::Eq}, {"bnez", CmpOp::Ne},
        {"blez", CmpOp::Gt}, {"bgez", CmpOp::Lt}, {"bltz", CmpOp::Lt}, {"bgtz", CmpOp::Gt},
    };
    a.uncond_branch = {"j", "jr"};
    a.call = {"jal", "jalr"};
    a.ret = {"ret", "mret"};
    a.shift = {{"sll", CmpOp::Shl},  {"slli", CmpOp::Shl},  {"sllw", CmpOp::Shl},
               {"slliw", CmpOp::Shl}, {"srl", CmpOp::Shr},  {"srli", CmpOp::Shr},
               {"sra", CmpOp::Shr},  {"srai", CmpOp::Shr},  {"srlw", CmpOp::Shr},
               {"sraw", CmpOp::Shr}};
    a.bit_logic = {{"and", CmpOp::And}, {"andi", CmpOp::And},
                   {"or", CmpOp::Or},   {"ori", CmpOp::Or}};
    a.compute = {"add",  "addi", "addw", "addiw", "sub",  "subw", "lui",  "auipc", "li",
                 "la",   "mv",   "mul",  "mulh",  "mulw", "div",  "divu", "rem",   "remu",
                 "lb",   "lbu",  "lh",   "lhu",   "lw",   "ld",   "sb",   "sh",    "sw",
                 "sd",   "slt",  "slti", "sltu",  "sltiu", "seqz", "snez", "xor",  "xori",
                 "not",  "neg",  "nop",  "sext.w"};
    return a;
  }();
  return spec;
}

const ArchSpec& ArchSpec::by_name(const std::string& name) {
  if (name == "cortex-m") return cortex_m();
  if (name == "riscv") return riscv();
  throw ValidationError("unknown architecture '" + name + "' (expected cortex-m or riscv)");
}

double CpiTable::cost(const std::string& stripped_mnemonic) const {
  auto it = entries.find(stripped_mnemonic);
  if (it == entries.end()) return default_cycles;
  return it->second.taken ? *it->second.taken : it->second.not_taken;
}

CpiTable CpiTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("cpi table must be an object");
  CpiTable t;
  if (j.contains("architecture")) t.architecture = j["architecture"].get<std::string>();
  if (j.contains("default")) {
    if (!j["default"].is_number()) throw ValidationError("cpi default must be a number");
    t.default_cycles = j["default"].get<double>();
  }
  if (t.default_cycles <= 0) throw ValidationError("cpi default must be > 0");
  if (j.contains("entries")) {
    if (!j["entries"].is_object()) throw ValidationError("cpi entries must be an object");
    for (const auto& [mnemonic, v] : j["entries"].items()) {
      CpiEntry e;
      if (v.is_number()) {
        e.not_taken = v.get<double>();
      } else if (v.is_object() && v.contains("not_taken")) {
        e.not_taken = v["not_taken"].get<double>();
        if (v.contains("taken")) e.taken = v["taken"].get<double>();
      } else {
        throw ValidationError("cpi entry for '" + mnemonic +
                              "' must be a number or {not_taken[, taken]}");
      }
      if (e.not_taken <= 0 || (e.taken && *e.taken <= 0))
        throw ValidationError("cpi entry for '" + mnemonic + "' must be > 0");
      t.entries[mnemonic] = e;
    }
  }
  return t;
}

nlohmann::json CpiTable::to_json() const {
  nlohmann::json j;
  j["architecture"] = architecture;
  j["default"] = default_cycles;
  j["entries"] = nlohmann::json::object();
  for (const auto& [m, e] : entries) {
    if (e.taken)
      j["entries"][m] = {{"not_taken", e.not_taken}, {"taken", *e.taken}};
    else
      j["entries"][m] = e.not_taken;
  }
  return j;
}

CpiTable CpiTable::builtin(const std::string& arch_name) {
  CpiTable t;
  t.architecture = arch_name;
  t.default_cycles = 1.0;
  auto add = [&](std::initializer_list<const char*> ms, double c,
                 std::optional<double> taken = std::nullopt) {
    for (const char* m : ms) t.entries[m] = CpiEntry{c, taken};
  };
  if (arch_name == "cortex-m") {
    add({"ldr", "ldrb", "ldrsb", "ldrh", "ldrsh", "str", "strb", "strh"}, 2);
    add({"push", "pop", "ldmia", "stmia", "ldm", "stm"}, 3);
    add({"bl", "blx"}, 4);
    add({"b"}, 3);
    add({"beq", "bne", "blt", "bge", "bgt", "ble", "bhi", "bls", "bcc", "bcs", "cbz", "cbnz"}, 1,
        2.0);
    add({"sdiv", "udiv"}, 12);
    add({"smull", "umull"}, 1);
  } else if (arch_name == "riscv") {
    add({"lb", "lbu", "lh", "lhu", "lw", "ld"}, 2);
    add({"jal", "jalr"}, 3);
    add({"j"}, 2);
    add({"beq", "bne", "blt", "bge", "bltu", "bgeu", "beqz", "bnez"}, 1, 3.0);
    add({"mul", "mulh"}, 5);
    add({"div", "divu", "rem", "remu"}, 20);
  } else {
    throw ValidationError("no builtin cpi table for architecture '" + arch_name + "'");
  }
  return t;
}

namespace {

InstrClass classify_kind(const std::string& stripped, const ArchSpec& arch) {
  using Kind = InstrClass::Kind;
  if (auto it = arch.cond_branch.find(stripped); it != arch.cond_branch.end())
    return {Kind::CompareBranch, it->second};
  if (arch.uncond_branch.count(stripped)) return {Kind::UncondBranch, CmpOp::Lt};
  if (arch.call.count(stripped)) return {Kind::Call, CmpOp::Lt};
  if (auto it = arch.shift.find(stripped); it != arch.shift.end())
    return {Kind::Shift, it->second};
  if (auto it = arch.bit_logic.find(stripped); it != arch.bit_logic.end())
    return {Kind::BitLogic, it->second};
  if (arch.compute.count(stripped)) return {Kind::Compute, CmpOp::Lt};
  return {Kind::Other, CmpOp::Lt};
}

bool is_return_instr(const Instruction& ins, const std::string& stripped, const ArchSpec& arch) {
  if (arch.ret.count(stripped)) return true;
  // pop {..., pc} ends a Thumb function.
  if (stripped == "pop")
    for (const std::string& op : ins.operands)
      if (op.find("pc") != std::string::npos) return true;
  return false;
}

// Last operand token that reads as a bare hex address.
std::optional<std::uint64_t> branch_target(const Instruction& ins) {
  std::optional<std::uint64_t> target;
  for (const std::string& op : ins.operands)
    for (const std::string& tok : whitespace_split(op))
      if (is_hex_str(tok) && tok.size() <= 16) target = std::stoull(tok, nullptr, 16);
  return target;
}

}  // namespace

std::pair<InstrClass, double> classify_instruction(const Instruction& ins, const ArchSpec& arch,
                                                   const CpiTable& cpi) {
  std::string stripped = strip_suffix(ins.mnemonic);
  return {classify_kind(stripped, arch), cpi.cost(stripped)};
}

BinCfg build_bin_cfg(const BinFunction& fn, const ArchSpec& arch) {
  BinCfg out;
  const std::vector<Instruction>& ins = fn.instructions;
  std::size_t n = ins.size();
  if (n == 0) {
    out.cfg = build_cfg({CfgNode{0, {}}}, {}, 0);
    out.block_instrs.resize(1);
    return out;
  }

  std::map<std::uint64_t, std::size_t> by_addr;
  for (std::size_t i = 0; i < n; ++i) by_addr[ins[i].addr] = i;

  std::set<std::size_t> leaders{0};
  for (std::size_t i = 0; i < n; ++i) {
    std::string stripped = strip_suffix(ins[i].mnemonic);
    bool cond = arch.cond_branch.count(stripped) || arch.bare_cond_branch.count(stripped);
    bool uncond = arch.uncond_branch.count(stripped);
    bool returns = is_return_instr(ins[i], stripped, arch);
    if (!cond && !uncond && !returns) continue;
    if (i + 1 < n) leaders.insert(i + 1);
    if (cond || uncond) {
      if (auto t = branch_target(ins[i]); t && by_addr.count(*t)) leaders.insert(by_addr[*t]);
    }
  }

  std::vector<std::size_t> starts(leaders.begin(), leaders.end());
  std::vector<int> block_of(n);
  out.block_instrs.resize(starts.size());
  for (std::size_t b = 0; b < starts.size(); ++b) {
    std::size_t end = b + 1 < starts.size() ? starts[b + 1] : n;
    for (std::size_t i = starts[b]; i < end; ++i) {
      block_of[i] = static_cast<int>(b);
      out.block_instrs[b].push_back(i);
    }
  }

  std::vector<CfgNode> nodes;
  for (std::size_t b = 0; b < starts.size(); ++b) {
    CfgNode node;
    node.id = static_cast<int>(b);
    for (std::size_t i : out.block_instrs[b]) node.text.push_back(format_instruction(ins[i]));
    nodes.push_back(std::move(node));
  }

  std::vector<CfgEdge> edges;
  for (std::size_t b = 0; b < starts.size(); ++b) {
    std::size_t last = out.block_instrs[b].back();
    const Instruction& li = ins[last];
    std::string stripped = strip_suffix(li.mnemonic);
    bool cond = arch.cond_branch.count(stripped) || arch.bare_cond_branch.count(stripped);
    bool uncond = arch.uncond_branch.count(stripped);
    bool returns = is_return_instr(li, stripped, arch);
    int bi = static_cast<int>(b);

    if (cond || uncond) {
      auto t = branch_target(li);
      if (t && by_addr.count(*t))
        edges.push_back({bi, block_of[by_addr[*t]]});
      else
        out.dropped_edges.emplace_back(li.addr, t.value_or(0));
      if (cond && b + 1 < starts.size()) edges.push_back({bi, static_cast<int>(b + 1)});
    } else if (!returns && b + 1 < starts.size()) {
      edges.push_back({bi, static_cast<int>(b + 1)});
    }
  }

  out.cfg = build_cfg(std::move(nodes), std::move(edges), 0);
  return out;
}

FeatureBundle instruction_features(const std::vector<Instruction>& instructions,
                                   const ArchSpec& arch) {
  FeatureBundle out;
  {
    for (const Instruction& ins : instructions) {
      std::string stripped = strip_suffix(ins.mnemonic);
      InstrClass cls = classify_kind(stripped, arch);

      using Kind = InstrClass::Kind;
      if (cls.kind == Kind::CompareBranch || cls.kind == Kind::Shift ||
          cls.kind == Kind::BitLogic)
        out.comparators[to_token(cls.op)]++;

      if (cls.kind == Kind::Call) {
        for (const std::string& op : ins.operands) {
          std::size_t lt = op.find('<');
          if (lt == std::string::npos) continue;
          std::size_t gt = op.find('>', lt);
          if (gt == std::string::npos) continue;
          std::string sym = op.substr(lt + 1, gt - lt - 1);
          if (std::size_t plus = sym.find('+'); plus != std::string::npos)
            sym = sym.substr(0, plus);
          if (!sym.empty()) out.function_names[sym]++;
        }
      }

      // Immediate literals. ARM spells them #k; RISC-V prints bare integers
      // (branch targets are excluded by skipping branch mnemonics).
      bool branch = arch.is_branch(stripped);
      for (const std::string& op : ins.operands) {
        if (arch.name == "riscv") {
          if (branch) continue;
          for (const std::string& tok : whitespace_split(op)) {
            const char* s = tok.c_str();
            char* end = nullptr;
            if (tok.empty()) continue;
            bool neg = *s == '-';
            const char* digits = neg ? s + 1 : s;
            if (*digits == '\0') continue;
            bool all_digits = true;
            for (const char* p = digits; *p; ++p)
              if (!std::isdigit(static_cast<unsigned char>(*p))) all_digits = false;
            bool hex = digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X');
            if (!all_digits && !hex) continue;
            long long v = std::strtoll(s, &end, hex ? 16 : 10);
            if (end && *end == '\0') out.integers[v]++;
          }
        } else {
          for (std::size_t h = op.find('#'); h != std::string::npos; h = op.find('#', h + 1)) {
            const char* s = op.c_str() + h + 1;
            char* end = nullptr;
            bool hex = (s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) ||
                       (s[0] == '-' && s[1] == '0' && (s[2] == 'x' || s[2] == 'X'));
            long long v = std::strtoll(s, &end, hex ? 16 : 10);
            if (end != s) out.integers[v]++;
          }
        }
      }

      // Identifier-like comment annotations become variable names.
      const std::string& c = ins.comment;
      for (std::size_t i = 0; i < c.size();) {
        unsigned char ch = static_cast<unsigned char>(c[i]);
        if (std::isalpha(ch) || c[i] == '_') {
          std::size_t b = i;
          while (i < c.size() && (std::isalnum(static_cast<unsigned char>(c[i])) ||
                                  c[i] == '_' || c[i] == '.'))
            ++i;
          out.variable_names[c.substr(b, i - b)]++;
        } else {
          ++i;
        }
      }
    }
  }
  return out;
}

FeatureBundle extract_bin_semantics(const BinFunction& fn, const BinCfg& bc, const Loop& loop,
                                    const ArchSpec& arch) {
  std::vector<Instruction> ins;
  for (int block : loop.body) {
    if (block < 0 || block >= static_cast<int>(bc.block_instrs.size())) continue;
    for (std::size_t idx : bc.block_instrs[block]) ins.push_back(fn.instructions[idx]);
  }
  return instruction_features(ins, arch);
}

}  // namespace instmeter
