#include "meltlite/ctype.hpp"

namespace meltlite {

namespace {

constexpr CTypeDesc descriptors[] = {
    {CType::value, "value", true, "mlt_val", "(mlt_val)0", 'v', "bp_aptr", "bp_aptr", ""},
    {CType::long_, "long", false, "long", "0L", 'l', "bp_long", "bp_longptr", "loclong"},
    {CType::cstring, "cstring", false, "const char*", "(const char*)0", 's', "bp_cstring",
     "bp_cstringptr", "loccstr"},
    {CType::void_, "void", false, "void", "", '\0', "", "", ""},
    {CType::hnode, "hnode", false, "hi_node_t", "(hi_node_t)0", 'n', "bp_hnode", "bp_hnodeptr",
     "lochnode"},
    {CType::hstmt, "hstmt", false, "hi_stmt_t", "(hi_stmt_t)0", 't', "bp_hstmt", "bp_hstmtptr",
     "lochstmt"},
    {CType::hstmtseq, "hstmtseq", false, "hi_stmtseq_t", "(hi_stmtseq_t)0", 'q', "bp_hstmtseq",
     "bp_hstmtseqptr", "lochseq"},
    {CType::hbb, "hbb", false, "hi_bb_t", "(hi_bb_t)0", 'b', "bp_hbb", "bp_hbbptr", "lochbb"},
};

} // namespace

const CTypeDesc &describe(CType t) { return descriptors[static_cast<int>(t)]; }

std::optional<CType> ctype_from_keyword(SymbolId keyword) {
  const std::string &n = keyword.name();
  for (const CTypeDesc &d : descriptors)
    if (n == d.keyword)
      return d.kind;
  return std::nullopt;
}

} // namespace meltlite
