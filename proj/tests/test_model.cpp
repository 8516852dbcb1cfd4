#include "doctest.h"

#include "instmeter/errors.hpp"
#include "instmeter/model.hpp"

using namespace instmeter;

namespace {

// Direct enumeration of valid window placements along one axis, as a check on
// the closed-form output-size formula.
std::int64_t count_window_positions(std::int64_t in, std::int64_t pad, std::int64_t k,
                                    std::int64_t stride) {
  std::int64_t count = 0;
  for (std::int64_t start = -pad; start + k <= in + pad; start += stride) ++count;
  return count;
}

}  // namespace

TEST_CASE("load_model parses layers and applies defaults") {
  nlohmann::json j = {
      {"name", "tiny"},
      {"layers",
       {
           {{"type", "Conv2D"},
            {"params",
             {{"in_h", 8}, {"in_w", 8}, {"in_ch", 3}, {"out_ch", 16}, {"kh", 3}, {"kw", 3}}}},
           {{"type", "ReLU"}, {"params", {{"n", 576}}}},
           {{"type", "MaxPool2D"},
            {"params",
             {{"in_h", 6}, {"in_w", 6}, {"in_ch", 16}, {"kh", 2}, {"kw", 2}, {"stride", 2}}}},
       }},
  };
  ModelDescriptor m = load_model(j);
  CHECK(m.name == "tiny");
  REQUIRE(m.layers.size() == 3);
  CHECK(m.layers[0].op_type == "Conv2D");
  // Omitted window parameters fall back to stride 1, pad 0.
  CHECK(m.layers[0].params.at("stride") == 1);
  CHECK(m.layers[0].params.at("pad") == 0);
  CHECK(m.layers[1].params.at("n") == 576);
  // An explicit stride is kept.
  CHECK(m.layers[2].params.at("stride") == 2);
  CHECK(m.layers[2].params.at("pad") == 0);
}

TEST_CASE("load_model rejects malformed documents") {
  CHECK_THROWS_AS(load_model(nlohmann::json::array()), ValidationError);
  CHECK_THROWS_AS(load_model(nlohmann::json{{"name", "x"}}), ValidationError);
  CHECK_THROWS_AS(load_model(nlohmann::json{{"name", "x"}, {"layers", 3}}), ValidationError);
  // Layer entries must be objects with a 'type' string.
  CHECK_THROWS_AS(load_model(nlohmann::json{{"layers", {1}}}), ValidationError);
  CHECK_THROWS_AS(load_model(nlohmann::json{{"layers", {{{"params", {{"n", 1}}}}}}}),
                  ValidationError);

  try {
    load_model(nlohmann::json{{"layers", {{{"type", "Gather"}, {"params", {{"n", 4}}}}}}});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("Gather") != std::string::npos);
  }

  try {
    load_model(nlohmann::json{
        {"layers",
         {{{"type", "Conv2D"},
           {"params", {{"in_h", 8}, {"in_w", 8}, {"in_ch", 3}, {"out_ch", 16}, {"kh", 3}}}}}}});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("kw") != std::string::npos);
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }

  // Parameters must be integers.
  CHECK_THROWS_AS(
      load_model(nlohmann::json{{"layers", {{{"type", "ReLU"}, {"params", {{"n", 2.5}}}}}}}),
      ValidationError);
  CHECK_THROWS_AS(
      load_model(nlohmann::json{{"layers", {{{"type", "ReLU"}, {"params", {{"n", "9"}}}}}}}),
      ValidationError);
}

TEST_CASE("conv_out_dim matches direct window enumeration") {
  for (std::int64_t in : {1, 2, 3, 5, 8, 16, 28, 33})
    for (std::int64_t pad : {0, 1, 2})
      for (std::int64_t k : {1, 2, 3, 5, 7})
        for (std::int64_t stride : {1, 2, 3}) {
          CAPTURE(in);
          CAPTURE(pad);
          CAPTURE(k);
          CAPTURE(stride);
          CHECK(conv_out_dim(in, pad, k, stride) == count_window_positions(in, pad, k, stride));
        }
  // Window larger than the padded input yields no placements.
  CHECK(conv_out_dim(2, 0, 5, 1) == 0);
  CHECK_THROWS_AS(conv_out_dim(8, 0, 3, 0), ValidationError);
}

TEST_CASE("lower_layers derives output sizes and expands normalization") {
  nlohmann::json j = {
      {"name", "m"},
      {"layers",
       {
           {{"type", "Conv2D"},
            {"params",
             {{"in_h", 28},
              {"in_w", 28},
              {"in_ch", 1},
              {"out_ch", 8},
              {"kh", 5},
              {"kw", 5},
              {"stride", 2},
              {"pad", 2}}}},
           {{"type", "BatchNormalization"},
            {"params", {{"in_h", 8}, {"in_w", 8}, {"in_ch", 16}}}},
           {{"type", "FullyConnected"}, {"params", {{"in_n", 128}, {"out_n", 10}}}},
       }},
  };
  std::vector<OperatorInstance> ops = lower_layers(load_model(j));
  REQUIRE(ops.size() == 4);

  CHECK(ops[0].op_type == "Conv2D");
  CHECK(ops[0].params.at("out_h") == conv_out_dim(28, 2, 5, 2));
  CHECK(ops[0].params.at("out_w") == conv_out_dim(28, 2, 5, 2));

  // Normalization becomes one Add and one Mul over every element.
  CHECK(ops[1].op_type == "Add");
  CHECK(ops[2].op_type == "Mul");
  CHECK(ops[1].params.at("n") == 8 * 8 * 16);
  CHECK(ops[2].params.at("n") == 8 * 8 * 16);

  // Non-windowed ops pass through untouched.
  CHECK(ops[3].op_type == "FullyConnected");
  CHECK(ops[3].params.count("out_h") == 0);
}

TEST_CASE("model_to_json round trips through load_model") {
  nlohmann::json j = {
      {"name", "rt"},
      {"layers",
       {
           {{"type", "AvgPool2D"},
            {"params", {{"in_h", 4}, {"in_w", 4}, {"in_ch", 2}, {"kh", 2}, {"kw", 2}}}},
           {{"type", "Softmax"}, {"params", {{"n", 10}}}},
       }},
  };
  ModelDescriptor m = load_model(j);
  ModelDescriptor again = load_model(model_to_json(m));
  REQUIRE(again.layers.size() == m.layers.size());
  CHECK(again.name == m.name);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CHECK(again.layers[i].op_type == m.layers[i].op_type);
    CHECK(again.layers[i].params == m.layers[i].params);
  }
}
