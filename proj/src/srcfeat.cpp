#include "instmeter/srcfeat.hpp"

#include <cctype>
#include <cstdlib>
#include <set>

#include "instmeter/expr.hpp"

namespace instmeter {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {
      "alignas", "alignof", "auto",     "bool",     "break",    "case",     "char",
      "class",   "const",   "continue", "default",  "delete",   "do",       "double",
      "else",    "enum",    "extern",   "false",    "float",    "for",      "goto",
      "if",      "inline",  "int",      "long",     "namespace", "new",     "nullptr",
      "operator", "private", "public",  "register", "return",   "short",    "signed",
      "sizeof",  "static",  "struct",   "switch",   "template", "this",     "true",
      "typedef", "typename", "union",   "unsigned", "using",    "void",     "volatile",
      "while"};
  return kw;
}

// Blanks out string/char literals and comments so they contribute nothing.
std::string clean_line(const std::string& line) {
  std::string out = line;
  bool in_str = false, in_chr = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    char c = out[i];
    if (in_str || in_chr) {
      char quote = in_str ? '"' : '\'';
      if (c == '\\' && i + 1 < out.size()) {
        out[i] = ' ';
        out[++i] = ' ';
        continue;
      }
      if (c == quote) in_str = in_chr = false;
      out[i] = ' ';
      continue;
    }
    if (c == '"') {
      in_str = true;
      out[i] = ' ';
    } else if (c == '\'') {
      in_chr = true;
      out[i] = ' ';
    } else if (c == '/' && i + 1 < out.size() && out[i + 1] == '/') {
      out.resize(i);
      break;
    } else if (c == '/' && i + 1 < out.size() && out[i + 1] == '*') {
      std::size_t end = out.find("*/", i + 2);
      if (end == std::string::npos) {
        out.resize(i);
        break;
      }
      for (std::size_t k = i; k < end + 2; ++k) out[k] = ' ';
      i = end + 1;
    }
  }
  return out;
}

void scan_line(const std::string& raw, FeatureBundle& out) {
  std::string s = clean_line(raw);
  std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(s[i]);

    if (std::isalpha(c) || s[i] == '_') {
      std::size_t b = i;
      while (i < n) {
        unsigned char d = static_cast<unsigned char>(s[i]);
        if (std::isalnum(d) || s[i] == '_') {
          ++i;
        } else if (s[i] == '.' && i + 1 < n &&
                   (std::isalpha(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '_')) {
          i += 2;  // dotted path element
        } else {
          break;
        }
      }
      std::string ident = s.substr(b, i - b);
      if (keywords().count(ident)) continue;
      std::size_t k = i;
      while (k < n && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
      if (k < n && s[k] == '(')
        out.function_names[ident]++;
      else
        out.variable_names[ident]++;
      continue;
    }

    if (std::isdigit(c)) {
      std::size_t b = i;
      bool hex = s[i] == '0' && i + 1 < n && (s[i + 1] == 'x' || s[i + 1] == 'X');
      bool is_float = false;
      if (hex) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
      } else {
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i < n && (s[i] == '.' || s[i] == 'e' || s[i] == 'E')) {
          is_float = true;  // not an integer literal; consume and drop
          ++i;
          while (i < n && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '+' ||
                           s[i] == '-' || s[i] == '.' || s[i] == 'e' || s[i] == 'E'))
            ++i;
        }
      }
      std::string num = s.substr(b, i - b);
      while (i < n && (s[i] == 'u' || s[i] == 'U' || s[i] == 'l' || s[i] == 'L' ||
                       s[i] == 'f' || s[i] == 'F')) {
        if (s[i] == 'f' || s[i] == 'F') is_float = true;
        ++i;
      }
      if (!is_float) out.integers[std::strtoll(num.c_str(), nullptr, hex ? 16 : 10)]++;
      continue;
    }

    auto two = [&](const char* op) {
      return i + 1 < n && s[i] == op[0] && s[i + 1] == op[1];
    };
    if (two("->")) { i += 2; continue; }         // member access, not a comparison
    if (two("&&") || two("||")) { i += 2; continue; }
    if (two("<<")) { out.comparators["<<"]++; i += 2; continue; }
    if (two(">>")) { out.comparators[">>"]++; i += 2; continue; }
    if (two("<=")) { out.comparators["<="]++; i += 2; continue; }
    if (two(">=")) { out.comparators[">="]++; i += 2; continue; }
    if (two("==")) { out.comparators["=="]++; i += 2; continue; }
    if (two("!=")) { out.comparators["!="]++; i += 2; continue; }
    if (s[i] == '<') { out.comparators["<"]++; ++i; continue; }
    if (s[i] == '>') { out.comparators[">"]++; ++i; continue; }
    if (s[i] == '&') { out.comparators["&"]++; ++i; continue; }
    if (s[i] == '|') { out.comparators["|"]++; ++i; continue; }
    ++i;
  }
}

}  // namespace

SrcFunction parse_src_cfg(const nlohmann::json& j) {
  SrcFunction fn;
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
    throw ValidationError("source cfg document must carry a string name");
  fn.name = j["name"].get<std::string>();
  fn.cfg = cfg_from_json(j);
  if (j.contains("trip_exprs")) {
    if (!j["trip_exprs"].is_object())
      throw ValidationError("trip_exprs must be an object keyed by node id");
    for (const auto& [key, v] : j["trip_exprs"].items()) {
      int node_id;
      try {
        std::size_t used = 0;
        node_id = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ValidationError("trip_exprs key '" + key + "' is not a node id");
      }
      if (!fn.cfg.has_node(node_id))
        throw ValidationError("trip_exprs references nonexistent node " + key);
      if (!v.is_string()) throw ValidationError("trip expression for node " + key +
                                                " must be a string");
      std::string text = v.get<std::string>();
      try {
        parse_expr(text);
      } catch (const ExprError& e) {
        throw ValidationError("trip expression for node " + key + ": " + e.what());
      }
      fn.trip_exprs[node_id] = text;
    }
  }
  return fn;
}

nlohmann::json src_cfg_to_json(const SrcFunction& fn) {
  nlohmann::json j = cfg_to_json(fn.cfg);
  j["name"] = fn.name;
  if (!fn.trip_exprs.empty()) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [id, expr] : fn.trip_exprs) t[std::to_string(id)] = expr;
    j["trip_exprs"] = std::move(t);
  }
  return j;
}

FeatureBundle extract_src_semantics(const SrcFunction& fn, const Loop& loop) {
  FeatureBundle out;
  for (int id : loop.body) {
    const CfgNode* node = fn.cfg.find(id);
    if (!node) continue;
    for (const std::string& line : node->text) scan_line(line, out);
  }
  return out;
}

nlohmann::json feature_bundle_to_json(const FeatureBundle& b) {
  nlohmann::json j;
  j["function_names"] = nlohmann::json::object();
  for (const auto& [k, v] : b.function_names) j["function_names"][k] = v;
  j["variable_names"] = nlohmann::json::object();
  for (const auto& [k, v] : b.variable_names) j["variable_names"][k] = v;
  j["integers"] = nlohmann::json::object();
  for (const auto& [k, v] : b.integers) j["integers"][std::to_string(k)] = v;
  j["comparators"] = nlohmann::json::object();
  for (const auto& [k, v] : b.comparators) j["comparators"][k] = v;
  return j;
}

}  // namespace instmeter
