#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "instmeter/instlib.hpp"

namespace instmeter {

// One layer of a network descriptor, as written in the model JSON.
struct LayerDesc {
  std::string op_type;
  std::map<std::string, std::int64_t> params;
};

struct ModelDescriptor {
  std::string name;
  std::vector<LayerDesc> layers;
};

// Parses and validates a model document: {"name": ..., "layers": [{"type":
// ..., "params": {key: int, ...}}, ...]}. Each op type has a required
// parameter set; windowed ops default stride=1 and pad=0 when omitted.
// Unknown ops or missing parameters throw ValidationError.
ModelDescriptor load_model(const nlohmann::json& j);

// Spatial output size for a strided sliding window.
std::int64_t conv_out_dim(std::int64_t in, std::int64_t pad, std::int64_t k, std::int64_t stride);

// Expands the descriptor into dispatchable operator instances. Derived
// quantities (out_h, out_w) are added to the parameter map. A
// BatchNormalization layer lowers to an Add and a Mul over the same element
// count; everything else lowers one-to-one.
std::vector<OperatorInstance> lower_layers(const ModelDescriptor& model);

nlohmann::json model_to_json(const ModelDescriptor& model);

}  // namespace instmeter
