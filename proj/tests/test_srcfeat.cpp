#include "doctest.h"

#include "instmeter/srcfeat.hpp"

using namespace instmeter;

namespace {

// A one-node function wrapping the given statement lines, with a self loop so
// the node forms a loop body.
FeatureBundle features_of(std::vector<std::string> lines) {
  SrcFunction fn;
  fn.name = "probe";
  fn.cfg = build_cfg({{0, {}}, {1, std::move(lines)}, {2, {}}},
                     {{0, 1}, {1, 1}, {1, 2}}, 0);
  auto loops = extract_loops(fn.cfg);
  REQUIRE(loops.size() == 1);
  return extract_src_semantics(fn, loops[0]);
}

}  // namespace

TEST_CASE("calls vs variables") {
  FeatureBundle fb = features_of({"acc = arm_nn_read_q15x2(ip_b0);", "sum += ip_b0;"});
  CHECK(fb.function_names.at("arm_nn_read_q15x2") == 1);
  CHECK(fb.variable_names.at("ip_b0") == 2);
  CHECK(fb.variable_names.at("acc") == 1);
  CHECK(fb.variable_names.at("sum") == 1);
  CHECK(fb.function_names.count("ip_b0") == 0);
}

TEST_CASE("keywords are not identifiers") {
  FeatureBundle fb = features_of({"for (int i = 0; i < n; i++) { if (x) return; }"});
  CHECK(fb.variable_names.count("for") == 0);
  CHECK(fb.variable_names.count("if") == 0);
  CHECK(fb.variable_names.count("int") == 0);
  CHECK(fb.variable_names.count("return") == 0);
  CHECK(fb.variable_names.at("i") == 3);  // declaration, test, increment
  CHECK(fb.variable_names.at("n") == 1);
  CHECK(fb.variable_names.at("x") == 1);
  // `if (x)` must not turn `if` into a call either.
  CHECK(fb.function_names.empty());
}

TEST_CASE("sizeof is a keyword, not a call") {
  FeatureBundle fb = features_of({"memset(buf, 0, sizeof(buf));"});
  CHECK(fb.function_names.at("memset") == 1);
  CHECK(fb.function_names.count("sizeof") == 0);
  CHECK(fb.variable_names.at("buf") == 2);
}

TEST_CASE("literals and comments are blanked before scanning") {
  FeatureBundle fb = features_of({"s = \"count < 3\"; // watch i_ker_y here",
                                  "c = 'x'; /* tmp1 */ real_var = 1;"});
  CHECK(fb.variable_names.count("count") == 0);
  CHECK(fb.variable_names.count("i_ker_y") == 0);
  CHECK(fb.variable_names.count("tmp1") == 0);
  CHECK(fb.variable_names.at("real_var") == 1);
  CHECK(fb.comparators.count("<") == 0);
  CHECK(fb.integers.count(3) == 0);
  CHECK(fb.integers.at(1) == 1);
}

TEST_CASE("dotted paths stay one identifier") {
  FeatureBundle fb = features_of({"x = dims.w * dims.h;"});
  CHECK(fb.variable_names.at("dims.w") == 1);
  CHECK(fb.variable_names.at("dims.h") == 1);
  CHECK(fb.variable_names.count("dims") == 0);
}

TEST_CASE("operator munching") {
  FeatureBundle fb = features_of({"a = b << 2; c = d >> 3;",
                                  "if (x <= y || p >= q && m != n) t = u == v;"});
  CHECK(fb.comparators.at("<<") == 1);
  CHECK(fb.comparators.at(">>") == 1);
  CHECK(fb.comparators.at("<=") == 1);
  CHECK(fb.comparators.at(">=") == 1);
  CHECK(fb.comparators.at("!=") == 1);
  CHECK(fb.comparators.at("==") == 1);
  // Logical and/or are not comparison features, and must not leak & or |.
  CHECK(fb.comparators.count("&") == 0);
  CHECK(fb.comparators.count("|") == 0);
}

TEST_CASE("member access arrow is skipped") {
  FeatureBundle fb = features_of({"n = input->dims;"});
  CHECK(fb.comparators.count(">") == 0);
  CHECK(fb.comparators.count("<") == 0);
  CHECK(fb.variable_names.at("input") == 1);
  CHECK(fb.variable_names.at("dims") == 1);
}

TEST_CASE("integer literals") {
  FeatureBundle fb = features_of({"a = 255; b = 0x10; c = 7u; d = 2.5f; e = 1e3;"});
  CHECK(fb.integers.at(255) == 1);
  CHECK(fb.integers.at(16) == 1);
  CHECK(fb.integers.at(7) == 1);
  CHECK(fb.integers.count(2) == 0);  // float literal dropped entirely
  CHECK(fb.integers.count(1) == 0);  // exponent form dropped
}

TEST_CASE("features accumulate over every node of the loop body") {
  SrcFunction fn;
  fn.name = "two_blocks";
  fn.cfg = build_cfg({{0, {}},
                      {1, {"while (k_y > 0) {"}},
                      {2, {"k_y = k_y - 1;"}},
                      {3, {}}},
                     {{0, 1}, {1, 2}, {2, 1}, {1, 3}}, 0);
  auto loops = extract_loops(fn.cfg);
  REQUIRE(loops.size() == 1);
  FeatureBundle fb = extract_src_semantics(fn, loops[0]);
  CHECK(fb.variable_names.at("k_y") == 3);
  CHECK(fb.comparators.at(">") == 1);
  CHECK(fb.integers.at(0) == 1);
  CHECK(fb.integers.at(1) == 1);
}

TEST_CASE("source function json validation") {
  nlohmann::json good = {{"name", "k"},
                         {"entry", 0},
                         {"nodes", {{{"id", 0}, {"text", {"int x;"}}}}},
                         {"edges", nlohmann::json::array()}};
  SrcFunction fn = parse_src_cfg(good);
  CHECK(fn.name == "k");
  CHECK(fn.cfg.nodes.size() == 1);

  nlohmann::json no_name = good;
  no_name.erase("name");
  CHECK_THROWS_AS(parse_src_cfg(no_name), ValidationError);

  nlohmann::json bad_key = good;
  bad_key["trip_exprs"] = {{"zap", "3"}};
  CHECK_THROWS_AS(parse_src_cfg(bad_key), ValidationError);

  nlohmann::json missing_node = good;
  missing_node["trip_exprs"] = {{"9", "3"}};
  CHECK_THROWS_AS(parse_src_cfg(missing_node), ValidationError);

  nlohmann::json bad_expr = good;
  bad_expr["trip_exprs"] = {{"0", "a +* b"}};
  CHECK_THROWS_AS(parse_src_cfg(bad_expr), ValidationError);

  good["trip_exprs"] = {{"0", "out_h * 2"}};
  fn = parse_src_cfg(good);
  CHECK(fn.trip_exprs.at(0) == "out_h * 2");
  CHECK(parse_src_cfg(src_cfg_to_json(fn)).trip_exprs == fn.trip_exprs);
}
