#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "instmeter/errors.hpp"

namespace instmeter {

// Arithmetic over loop trip counts: nonnegative integer literals, named shape
// parameters, + - * / with the usual precedence, and the two-argument
// intrinsics ceil_div, max, min. Division is floor division.
struct TripExpr {
  enum class Kind { Literal, Param, Add, Sub, Mul, Div, CeilDiv, Max, Min };

  Kind kind = Kind::Literal;
  std::int64_t value = 0;  // Literal only
  std::string name;        // Param only
  std::shared_ptr<TripExpr> lhs, rhs;

  static TripExpr literal(std::int64_t v);
  static TripExpr param(std::string n);
  static TripExpr binary(Kind k, TripExpr l, TripExpr r);
};

bool operator==(const TripExpr& a, const TripExpr& b);

using ParamEnv = std::map<std::string, std::int64_t>;

// Parses `text`; throws ExprError naming the 0-based offset on bad syntax or
// an unknown function name.
TripExpr parse_expr(const std::string& text);

// Evaluates to a nonnegative count. A negative result clamps to 0 and sets
// *clamped when provided. Unbound names and division by zero throw ExprError.
std::int64_t eval_expr(const TripExpr& e, const ParamEnv& env, bool* clamped = nullptr);

// Prints with minimal parentheses; parsing the result reproduces the tree.
std::string to_string(const TripExpr& e);

// Parameter names referenced anywhere in the expression.
std::set<std::string> expr_params(const TripExpr& e);

}  // namespace instmeter
