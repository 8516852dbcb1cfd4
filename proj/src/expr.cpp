#include "instmeter/expr.hpp"

#include <cctype>
#include <utility>

namespace instmeter {

TripExpr TripExpr::literal(std::int64_t v) {
  TripExpr e;
  e.kind = Kind::Literal;
  e.value = v;
  return e;
}

TripExpr TripExpr::param(std::string n) {
  TripExpr e;
  e.kind = Kind::Param;
  e.name = std::move(n);
  return e;
}

TripExpr TripExpr::binary(Kind k, TripExpr l, TripExpr r) {
  TripExpr e;
  e.kind = k;
  e.lhs = std::make_shared<TripExpr>(std::move(l));
  e.rhs = std::make_shared<TripExpr>(std::move(r));
  return e;
}

bool operator==(const TripExpr& a, const TripExpr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case TripExpr::Kind::Literal:
      return a.value == b.value;
    case TripExpr::Kind::Param:
      return a.name == b.name;
    default:
      return *a.lhs == *b.lhs && *a.rhs == *b.rhs;
  }
}

namespace {

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ExprError(msg + " at offset " + std::to_string(at), at);
  }

  TripExpr parse_sum() {
    TripExpr e = parse_term();
    for (;;) {
      char c = peek();
      if (c != '+' && c != '-') return e;
      ++pos;
      e = TripExpr::binary(c == '+' ? TripExpr::Kind::Add : TripExpr::Kind::Sub, std::move(e),
                           parse_term());
    }
  }

  TripExpr parse_term() {
    TripExpr e = parse_factor();
    for (;;) {
      char c = peek();
      if (c != '*' && c != '/') return e;
      ++pos;
      e = TripExpr::binary(c == '*' ? TripExpr::Kind::Mul : TripExpr::Kind::Div, std::move(e),
                           parse_factor());
    }
  }

  TripExpr parse_factor() {
    char c = peek();
    if (c == '(') {
      ++pos;
      TripExpr e = parse_sum();
      if (peek() != ')') fail("expected ')'", pos);
      ++pos;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos;
      std::int64_t v = 0;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        v = v * 10 + (text[pos] - '0');
        ++pos;
      }
      if (pos < text.size() &&
          (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
        fail("malformed number", start);
      return TripExpr::literal(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '_'))
        ++pos;
      std::string name = text.substr(start, pos - start);
      if (peek() == '(') {
        TripExpr::Kind k;
        if (name == "ceil_div")
          k = TripExpr::Kind::CeilDiv;
        else if (name == "max")
          k = TripExpr::Kind::Max;
        else if (name == "min")
          k = TripExpr::Kind::Min;
        else
          fail("unknown function '" + name + "'", start);
        ++pos;  // '('
        TripExpr a = parse_sum();
        if (peek() != ',') fail("expected ','", pos);
        ++pos;
        TripExpr b = parse_sum();
        if (peek() != ')') fail("expected ')'", pos);
        ++pos;
        return TripExpr::binary(k, std::move(a), std::move(b));
      }
      return TripExpr::param(std::move(name));
    }
    if (c == '\0') fail("unexpected end of expression", pos);
    fail(std::string("unexpected '") + c + "'", pos);
  }
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t eval_node(const TripExpr& e, const ParamEnv& env) {
  using K = TripExpr::Kind;
  switch (e.kind) {
    case K::Literal:
      return e.value;
    case K::Param: {
      auto it = env.find(e.name);
      if (it == env.end()) throw ExprError("unbound parameter '" + e.name + "'", 0);
      return it->second;
    }
    default:
      break;
  }
  std::int64_t a = eval_node(*e.lhs, env);
  std::int64_t b = eval_node(*e.rhs, env);
  switch (e.kind) {
    case K::Add:
      return a + b;
    case K::Sub:
      return a - b;
    case K::Mul:
      return a * b;
    case K::Div:
      if (b == 0) throw ExprError("division by zero", 0);
      return floor_div(a, b);
    case K::CeilDiv:
      if (b == 0) throw ExprError("division by zero", 0);
      return -floor_div(-a, b);
    case K::Max:
      return a > b ? a : b;
    case K::Min:
      return a < b ? a : b;
    default:
      return 0;  // unreachable
  }
}

int precedence(TripExpr::Kind k) {
  switch (k) {
    case TripExpr::Kind::Add:
    case TripExpr::Kind::Sub:
      return 1;
    case TripExpr::Kind::Mul:
    case TripExpr::Kind::Div:
      return 2;
    default:
      return 3;
  }
}

void print_node(const TripExpr& e, std::string& out) {
  using K = TripExpr::Kind;
  switch (e.kind) {
    case K::Literal:
      out += std::to_string(e.value);
      return;
    case K::Param:
      out += e.name;
      return;
    case K::CeilDiv:
    case K::Max:
    case K::Min:
      out += e.kind == K::CeilDiv ? "ceil_div(" : (e.kind == K::Max ? "max(" : "min(");
      print_node(*e.lhs, out);
      out += ", ";
      print_node(*e.rhs, out);
      out += ")";
      return;
    default:
      break;
  }
  int prec = precedence(e.kind);
  // Parenthesize so re-parsing (left-associative) rebuilds the same tree.
  bool lp = precedence(e.lhs->kind) < prec;
  bool rp = precedence(e.rhs->kind) <= prec;
  if (lp) out += "(";
  print_node(*e.lhs, out);
  if (lp) out += ")";
  switch (e.kind) {
    case K::Add: out += " + "; break;
    case K::Sub: out += " - "; break;
    case K::Mul: out += " * "; break;
    default: out += " / "; break;
  }
  if (rp) out += "(";
  print_node(*e.rhs, out);
  if (rp) out += ")";
}

void collect_params(const TripExpr& e, std::set<std::string>& out) {
  if (e.kind == TripExpr::Kind::Param) {
    out.insert(e.name);
  } else if (e.lhs) {
    collect_params(*e.lhs, out);
    collect_params(*e.rhs, out);
  }
}

}  // namespace

TripExpr parse_expr(const std::string& text) {
  Parser p(text);
  TripExpr e = p.parse_sum();
  if (p.peek() != '\0') p.fail(std::string("unexpected '") + p.peek() + "'", p.pos);
  return e;
}

std::int64_t eval_expr(const TripExpr& e, const ParamEnv& env, bool* clamped) {
  std::int64_t v = eval_node(e, env);
  if (clamped) *clamped = v < 0;
  return v < 0 ? 0 : v;
}

std::string to_string(const TripExpr& e) {
  std::string out;
  print_node(e, out);
  return out;
}

std::set<std::string> expr_params(const TripExpr& e) {
  std::set<std::string> out;
  collect_params(e, out);
  return out;
}

}  // namespace instmeter
