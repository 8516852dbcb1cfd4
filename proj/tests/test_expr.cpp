#include "doctest.h"

#include "instmeter/expr.hpp"

using namespace instmeter;

namespace {

std::int64_t ev(const std::string& text, const ParamEnv& env = {}) {
  return eval_expr(parse_expr(text), env);
}

}  // namespace

TEST_CASE("literal and parameter evaluation") {
  CHECK(ev("7") == 7);
  CHECK(ev("out_h", {{"out_h", 12}}) == 12);
  CHECK(ev("0") == 0);
}

TEST_CASE("arithmetic with precedence") {
  CHECK(ev("2 + 3 * 4") == 14);
  CHECK(ev("(2 + 3) * 4") == 20);
  CHECK(ev("10 - 2 - 3") == 5);   // left associative
  CHECK(ev("20 / 3") == 6);       // floor division
  CHECK(ev("2 * k + 1", {{"k", 5}}) == 11);
}

TEST_CASE("intrinsics") {
  CHECK(ev("ceil_div(7, 2)") == 4);
  CHECK(ev("ceil_div(8, 2)") == 4);
  CHECK(ev("max(3, 9)") == 9);
  CHECK(ev("min(3, 9)") == 3);
  CHECK(ev("max(0, n - 3)", {{"n", 1}}) == 0);
}

TEST_CASE("floor division on negative intermediates") {
  // (1 - 8) / 2 = floor(-3.5) = -4, then + 4 = 0.
  CHECK(ev("(1 - 8) / 2 + 4") == 0);
  CHECK(ev("ceil_div(1 - 8, 2) + 4") == 1);  // ceil(-3.5) = -3
}

TEST_CASE("negative results clamp to zero and report it") {
  bool clamped = false;
  CHECK(eval_expr(parse_expr("2 - 5"), {}, &clamped) == 0);
  CHECK(clamped);
  clamped = false;
  CHECK(eval_expr(parse_expr("5 - 2"), {}, &clamped) == 3);
  CHECK_FALSE(clamped);
}

TEST_CASE("syntax errors carry the offset") {
  try {
    parse_expr("a +* b");
    FAIL("expected a parse error");
  } catch (const ExprError& e) {
    CHECK(e.offset == 3);
  }
  CHECK_THROWS_AS(parse_expr(""), ExprError);
  CHECK_THROWS_AS(parse_expr("1 +"), ExprError);
  CHECK_THROWS_AS(parse_expr("(1"), ExprError);
  CHECK_THROWS_AS(parse_expr("1 2"), ExprError);   // trailing junk
  CHECK_THROWS_AS(parse_expr("foo(1, 2)"), ExprError);  // unknown function
  CHECK_THROWS_AS(parse_expr("max(1)"), ExprError);     // arity
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(ev("n + 1"), ExprError);          // unbound name
  CHECK_THROWS_AS(ev("4 / 0"), ExprError);          // division by zero
  CHECK_THROWS_AS(ev("ceil_div(4, n - n)", {{"n", 3}}), ExprError);
}

TEST_CASE("printing uses minimal parentheses and round-trips") {
  const char* cases[] = {
      "1",
      "a + b * c",
      "(a + b) * c",
      "a - (b - c)",
      "a - b - c",
      "a * (b + 1) - min(a, 2)",
      "ceil_div(n + 1, 4)",
      "max(min(a, b), ceil_div(a, b))",
  };
  for (const char* text : cases) {
    TripExpr e = parse_expr(text);
    std::string printed = to_string(e);
    CHECK(parse_expr(printed) == e);
    // Printing the reparse is a fixed point.
    CHECK(to_string(parse_expr(printed)) == printed);
  }
  CHECK(to_string(parse_expr("a + (b * c)")) == "a + b * c");
  CHECK(to_string(parse_expr("((a))")) == "a");
}

TEST_CASE("parameter collection") {
  std::set<std::string> want{"k_h", "out_w"};
  CHECK(expr_params(parse_expr("k_h * out_w + k_h")) == want);
  CHECK(expr_params(parse_expr("3 * 4")).empty());
}

TEST_CASE("tree equality is structural") {
  CHECK(parse_expr("a + b") == parse_expr("a + b"));
  CHECK_FALSE(parse_expr("a + b") == parse_expr("b + a"));
  CHECK_FALSE(parse_expr("a + b + c") == parse_expr("a + (b + c)"));
}
