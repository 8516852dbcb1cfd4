#include "instmeter/features.hpp"

namespace instmeter {

const char* to_token(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Shr: return ">>";
    case CmpOp::Shl: return "<<";
    case CmpOp::And: return "&";
    case CmpOp::Or: return "|";
  }
  return "?";
}

std::string collapse_token(const std::string& token) {
  if (token == ">=") return "<";  // bge/blt family
  if (token == "<=") return ">";  // ble/bgt family
  return token;
}

}  // namespace instmeter
