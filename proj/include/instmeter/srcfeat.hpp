#pragma once

#include <map>
#include <string>

#include "instmeter/cfg.hpp"
#include "instmeter/features.hpp"
#include "json.hpp"

namespace instmeter {

// Source-level function: a statement CFG plus per-loop-header trip-count
// expressions, as produced by an external source-to-CFG front end.
struct SrcFunction {
  std::string name;
  Cfg cfg;
  std::map<int, std::string> trip_exprs;  // loop header node id -> expression
};

// Reads the source CFG document: the common CFG fields plus "name" and an
// optional "trip_exprs" object keyed by node-id strings. Expressions are
// parsed eagerly and referenced nodes must exist.
SrcFunction parse_src_cfg(const nlohmann::json& j);

nlohmann::json src_cfg_to_json(const SrcFunction& fn);

// Tokenizes every statement line in the loop body: called identifiers become
// function names, other non-keyword identifiers (dotted paths kept whole)
// become variable names, integer literals are collected by value, and
// comparison/shift/bitwise operators map to canonical tokens. && and || are
// control flow, not features.
FeatureBundle extract_src_semantics(const SrcFunction& fn, const Loop& loop);

nlohmann::json feature_bundle_to_json(const FeatureBundle& b);

}  // namespace instmeter
