#pragma once

#include "meltlite/ctype.hpp"
#include "meltlite/sexpr.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace meltlite {

struct Formal {
  SymbolId name;
  CType ctype = CType::value;
  friend bool operator==(const Formal &, const Formal &) = default;
};

using FormalList = std::vector<Formal>;

/// `(defprimitive name formals :result [:doc ms] expansion)`
struct PrimitiveDef {
  SymbolId name;
  Location where;
  FormalList formals;
  CType result = CType::void_;
  MacroString expansion;
  std::optional<MacroString> doc;
};

/// `(defciterator name inputs state locals before after)`
struct CIteratorDef {
  SymbolId name;
  Location where;
  FormalList inputs;
  SymbolId state;
  FormalList locals;
  MacroString before;
  MacroString after;
  std::optional<MacroString> doc;
};

/// `(defcmatcher name inputs outputs state test [fill])`. The first input is
/// the matched thing.
struct CMatcherDef {
  SymbolId name;
  Location where;
  FormalList inputs;
  FormalList outputs;
  SymbolId state;
  MacroString test;
  std::optional<MacroString> fill;
  std::optional<MacroString> doc;
};

/// `(defunmatcher name inputs outputs function)`. At runtime the matcher name
/// denotes the matching closure itself.
struct FunMatcherDef {
  SymbolId name;
  Location where;
  FormalList inputs;
  FormalList outputs;
  std::optional<MacroString> doc;
};

struct ClassInfo;

struct FieldInfo {
  SymbolId name;
  const ClassInfo *owner = nullptr;
  int index = 0; // offset in obj_vartab, superclass fields first
};

struct ClassInfo {
  SymbolId name;
  Location where;
  std::shared_ptr<const ClassInfo> super;
  std::vector<std::shared_ptr<FieldInfo>> own_fields;
  std::vector<std::shared_ptr<FieldInfo>> all_fields;
  std::optional<MacroString> doc;

  int field_count() const { return static_cast<int>(all_fields.size()); }
  bool is_subclass_of(const ClassInfo *other) const {
    for (const ClassInfo *c = this; c; c = c->super.get())
      if (c == other)
        return true;
    return false;
  }
};

using ClassPtr = std::shared_ptr<const ClassInfo>;
using FieldPtr = std::shared_ptr<FieldInfo>;

struct SelectorInfo {
  SymbolId name;
  std::optional<FormalList> formals; // recorded, not enforced at send sites
};

} // namespace meltlite
