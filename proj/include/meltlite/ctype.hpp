#pragma once

#include "meltlite/symbol.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace meltlite {

/// Static kind of a "thing": a heap value or one of the host stuff kinds.
enum class CType : unsigned char { value, long_, cstring, void_, hnode, hstmt, hstmtseq, hbb };

inline constexpr std::array<CType, 8> all_ctypes = {
    CType::value, CType::long_,    CType::cstring, CType::void_,
    CType::hnode, CType::hstmt, CType::hstmtseq, CType::hbb};

/// Template fragments codegen needs for one c-type.
struct CTypeDesc {
  CType kind;
  std::string_view keyword;       // "long" for :long
  bool is_value;
  std::string_view c_type;        // declared type of a slot
  std::string_view cleared;       // cleared literal
  char descriptor;                // secondary argument descriptor character
  std::string_view param_member;  // union member for passing an argument
  std::string_view result_member; // union member for receiving a result
  std::string_view slot_prefix;   // frame member prefix for stuff slots
};

const CTypeDesc &describe(CType t);

/// `:long` -> CType::long_; nullopt for non c-type keywords.
std::optional<CType> ctype_from_keyword(SymbolId keyword);

inline bool is_value(CType t) { return t == CType::value; }
inline std::string_view keyword_name(CType t) { return describe(t).keyword; }
inline std::string_view cleared_literal(CType t) { return describe(t).cleared; }
inline char descriptor_char(CType t) { return describe(t).descriptor; }

} // namespace meltlite
