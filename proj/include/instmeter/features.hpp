#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace instmeter {

// Canonical comparator tokens shared by source statements and instructions.
enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne, Shr, Shl, And, Or };

const char* to_token(CmpOp op);  // "<", "<=", ">", ">=", "==", "!=", ">>", "<<", "&", "|"

// Folds a source-side token into the space the instruction side can express.
// Branch mnemonics only distinguish negation families: {<, >=} -> "<" and
// {<=, >} -> ">", mirroring the identical/counter pairing of the lookup table.
std::string collapse_token(const std::string& token);

// Per-loop semantic features, multisets stored as count maps.
struct FeatureBundle {
  std::map<std::string, int> function_names;
  std::map<std::string, int> variable_names;
  std::map<std::int64_t, int> integers;
  std::map<std::string, int> comparators;  // canonical tokens
};

// Multiset Jaccard similarity: sum(min)/sum(max); two empty multisets give 0.
template <typename K>
double multiset_jaccard(const std::map<K, int>& a, const std::map<K, int>& b) {
  long long inter = 0, uni = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      uni += ia->second;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      uni += ib->second;
      ++ib;
    } else {
      inter += ia->second < ib->second ? ia->second : ib->second;
      uni += ia->second > ib->second ? ia->second : ib->second;
      ++ia;
      ++ib;
    }
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace instmeter
