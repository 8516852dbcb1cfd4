#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace instmeter {

// Base class for all toolchain failures. The CLI maps anything derived from
// this to exit code 2; genuine usage mistakes exit with 1 before work starts.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input documents: bad CFG JSON, schema violations, bad references.
struct ValidationError : Error {
  using Error::Error;
};

// Disassembly listing grammar violations (bad address, non-monotonic layout).
struct DisasmError : Error {
  using Error::Error;
};

// Trip-count expression problems; `offset` is the 0-based character position.
struct ExprError : Error {
  ExprError(const std::string& what, std::size_t at) : Error(what), offset(at) {}
  std::size_t offset;
};

// Structural divergence between source and disassembly loop graphs.
struct MatchError : Error {
  using Error::Error;
};

// Dataset / model descriptor problems.
struct DataError : Error {
  using Error::Error;
};

}  // namespace instmeter
