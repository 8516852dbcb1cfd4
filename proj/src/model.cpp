#include "instmeter/model.hpp"

#include <algorithm>

#include "instmeter/errors.hpp"

namespace instmeter {

namespace {

struct OpSchema {
  std::vector<std::string> required;
  std::map<std::string, std::int64_t> defaults;
};

const std::map<std::string, OpSchema>& op_schemas() {
  static const std::map<std::string, OpSchema> schemas = {
      {"Conv2D",
       {{"in_h", "in_w", "in_ch", "out_ch", "kh", "kw"}, {{"stride", 1}, {"pad", 0}}}},
      {"DepthConv2D", {{"in_h", "in_w", "in_ch", "kh", "kw"}, {{"stride", 1}, {"pad", 0}}}},
      {"MaxPool2D", {{"in_h", "in_w", "in_ch", "kh", "kw"}, {{"stride", 1}, {"pad", 0}}}},
      {"AvgPool2D", {{"in_h", "in_w", "in_ch", "kh", "kw"}, {{"stride", 1}, {"pad", 0}}}},
      {"FullyConnected", {{"in_n", "out_n"}, {}}},
      {"ReLU", {{"n"}, {}}},
      {"Add", {{"n"}, {}}},
      {"Mul", {{"n"}, {}}},
      {"Softmax", {{"n"}, {}}},
      {"Reshape", {{"n"}, {}}},
      {"BatchNormalization", {{"in_h", "in_w", "in_ch"}, {}}},
  };
  return schemas;
}

}  // namespace

ModelDescriptor load_model(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("model document must be an object");
  ModelDescriptor m;
  m.name = j.value("name", "");
  if (!j.contains("layers") || !j["layers"].is_array())
    throw ValidationError("model document needs a 'layers' array");
  int index = 0;
  for (const auto& lj : j["layers"]) {
    if (!lj.is_object())
      throw ValidationError("layer " + std::to_string(index) + " must be an object");
    LayerDesc L;
    if (!lj.contains("type") || !lj["type"].is_string())
      throw ValidationError("layer " + std::to_string(index) + " needs a 'type' string");
    L.op_type = lj["type"].get<std::string>();
    auto sit = op_schemas().find(L.op_type);
    if (sit == op_schemas().end())
      throw ValidationError("layer " + std::to_string(index) + ": unknown op '" + L.op_type +
                            "'");
    if (lj.contains("params")) {
      if (!lj["params"].is_object())
        throw ValidationError("layer " + std::to_string(index) + " ('" + L.op_type +
                              "'): 'params' must be an object");
      for (const auto& [k, v] : lj["params"].items()) {
        if (!v.is_number_integer())
          throw ValidationError("layer " + std::to_string(index) + " ('" + L.op_type +
                                "'): parameter '" + k + "' must be an integer");
        L.params[k] = v.get<std::int64_t>();
      }
    }
    for (const std::string& req : sit->second.required)
      if (!L.params.count(req))
        throw ValidationError("layer " + std::to_string(index) + " ('" + L.op_type +
                              "'): missing parameter '" + req + "'");
    for (const auto& [k, v] : sit->second.defaults)
      if (!L.params.count(k)) L.params[k] = v;
    m.layers.push_back(std::move(L));
    ++index;
  }
  return m;
}

std::int64_t conv_out_dim(std::int64_t in, std::int64_t pad, std::int64_t k,
                          std::int64_t stride) {
  if (stride <= 0) throw ValidationError("stride must be positive");
  std::int64_t span = in + 2 * pad - k;
  if (span < 0) return 0;
  return span / stride + 1;
}

std::vector<OperatorInstance> lower_layers(const ModelDescriptor& model) {
  std::vector<OperatorInstance> ops;
  for (const LayerDesc& L : model.layers) {
    if (L.op_type == "BatchNormalization") {
      std::int64_t n =
          L.params.at("in_h") * L.params.at("in_w") * L.params.at("in_ch");
      ops.push_back({"Add", {{"n", n}}});
      ops.push_back({"Mul", {{"n", n}}});
      continue;
    }
    OperatorInstance op;
    op.op_type = L.op_type;
    op.params = L.params;
    if (op.params.count("kh") && op.params.count("in_h")) {
      std::int64_t stride = op.params.count("stride") ? op.params.at("stride") : 1;
      std::int64_t pad = op.params.count("pad") ? op.params.at("pad") : 0;
      op.params["out_h"] = conv_out_dim(op.params.at("in_h"), pad, op.params.at("kh"), stride);
      op.params["out_w"] = conv_out_dim(op.params.at("in_w"), pad, op.params.at("kw"), stride);
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

nlohmann::json model_to_json(const ModelDescriptor& model) {
  nlohmann::json j;
  j["name"] = model.name;
  j["layers"] = nlohmann::json::array();
  for (const LayerDesc& L : model.layers) {
    nlohmann::json lj;
    lj["type"] = L.op_type;
    lj["params"] = nlohmann::json::object();
    for (const auto& [k, v] : L.params) lj["params"][k] = v;
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

}  // namespace instmeter
