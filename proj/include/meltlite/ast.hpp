#pragma once

#include "meltlite/defs.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace meltlite {

struct Ast;
struct Pattern;
struct Routine;
struct Binding;
struct MatchGraph;

using AstPtr = std::shared_ptr<Ast>;
using PatternPtr = std::shared_ptr<Pattern>;
using RoutinePtr = std::shared_ptr<Routine>;
using BindingPtr = std::shared_ptr<const Binding>;

std::uint32_t fresh_uid();

enum class VarRole {
  formal,    // routine formal
  local,     // let/letrec/multicall/c-iterator local
  temp,      // normalizer temporary
  pattern,   // pattern variable of a match clause
  module,    // module-level definition, lives in the start routine
  import,    // value imported from the parent environment or predefined
  matchdata, // match-graph data node
  flag,      // match-graph boolean flag
};

/// A frame-resident variable. Every reference in the AST points at one.
struct Var {
  SymbolId name; // invalid for anonymous temporaries
  CType ctype = CType::value;
  VarRole role = VarRole::local;
  Location where;
  Routine *owner = nullptr;
  int temp_index = -1;
  std::uint32_t uid = fresh_uid();
  bool ctype_inferred = true; // false until a pattern variable's position is known
  bool ctype_declared = true; // false for a let binding without a c-type keyword
  std::string import_name;    // for VarRole::import
  int predef_slot = -1;       // for predefined imports

  std::string display_name() const;
};

using VarPtr = std::shared_ptr<Var>;

struct Label {
  SymbolId name;
  Location where;
  std::uint32_t uid = fresh_uid();
  VarPtr result; // holds the loop's value; set by the normalizer
  CType ctype = CType::void_;
};

using LabelPtr = std::shared_ptr<Label>;

/// A function body: the start routine of a module, a `defun` or a `lambda`.
struct Routine {
  std::uint32_t uid = fresh_uid();
  SymbolId name;
  Location where;
  std::vector<VarPtr> formals;
  std::vector<AstPtr> body;
  Routine *parent = nullptr;
  bool is_start = false;
  std::optional<MacroString> doc;

  // Filled by the normalizer.
  std::vector<VarPtr> closed;
  std::vector<CType> results; // secondary result c-types
  std::vector<VarPtr> slots;  // every local needing a frame slot, in order
  int temp_count = 0;
};

/// Quoted constant: symbol, keyword, boxed integer or boxed string.
struct QuotedConst {
  enum class Kind { symbol, keyword, integer, string } kind = Kind::symbol;
  SymbolId symbol;
  std::int64_t integer = 0;
  std::string text;
};

struct LetBinding {
  VarPtr var;
  AstPtr init;
};

struct FieldInit {
  FieldPtr field;
  AstPtr value;
};

struct MatchClause {
  Location where;
  PatternPtr pattern;
  std::vector<VarPtr> vars; // pattern variables, first-occurrence order
  std::vector<AstPtr> body;
};

enum class ExportKind { values, macro, patmacro, klass, synonym };

struct ExportEntry {
  SymbolId name;
  VarPtr value; // null for compile-time-only bindings
};

namespace form {
// atoms
struct VarRef { VarPtr var; };
struct LongLit { std::int64_t value; };
struct StringLit { std::string value; };
struct Nil {};
// expressions
struct Quote { QuotedConst constant; };
struct Apply { AstPtr fn; std::vector<AstPtr> args; };
struct Send { AstPtr selector; AstPtr receiver; std::vector<AstPtr> args; };
struct Setq { VarPtr var; AstPtr value; };
struct Let { std::vector<LetBinding> bindings; std::vector<AstPtr> body; };
struct Letrec { std::vector<LetBinding> bindings; std::vector<AstPtr> body; };
struct Lambda { RoutinePtr routine; };
struct If { AstPtr test; AstPtr then; AstPtr otherwise; };
struct CondClause { AstPtr test; std::vector<AstPtr> body; }; // null test: :else
struct Cond { std::vector<CondClause> clauses; };
struct And { std::vector<AstPtr> operands; };
struct Or { std::vector<AstPtr> operands; };
struct Progn { std::vector<AstPtr> body; };
struct Forever { LabelPtr label; std::vector<AstPtr> body; };
struct Exit { LabelPtr label; std::vector<AstPtr> body; };
struct Return { std::vector<AstPtr> values; };
struct Multicall { std::vector<VarPtr> formals; AstPtr call; std::vector<AstPtr> body; };
struct Match {
  AstPtr subject;
  std::vector<MatchClause> clauses;
  std::shared_ptr<MatchGraph> graph; // set by the match compiler
};
struct GetField { FieldPtr field; AstPtr object; AstPtr class_ref; bool unsafe = false; };
struct PutFields {
  AstPtr object;
  std::vector<FieldInit> fields;
  std::vector<AstPtr> class_refs; // owner class of each field, for the safe variant
  bool unsafe = false;
};
struct Instance { ClassPtr klass; AstPtr class_ref; std::vector<FieldInit> fields; };
struct Tuple { std::vector<AstPtr> elements; };
struct ListCtor { std::vector<AstPtr> elements; };
struct ChunkRef { SymbolId name; AstPtr value; };
struct CodeChunk { SymbolId state; MacroString body; std::vector<ChunkRef> refs; };
struct PrimitiveCall { std::shared_ptr<const PrimitiveDef> prim; std::vector<AstPtr> args; };
struct CIterInvoke {
  std::shared_ptr<const CIteratorDef> iter;
  std::vector<AstPtr> inputs;
  std::vector<VarPtr> locals;
  std::vector<AstPtr> body;
};
struct DebugMsg { AstPtr value; std::string message; };
struct AssertMsg { std::string message; AstPtr test; };
struct CompileWarning { std::string message; AstPtr expr; };
struct CppIf { std::string symbol; AstPtr then; AstPtr otherwise; };
struct HostIf { std::string prefix; bool selected = false; std::vector<AstPtr> body; };
struct CurrentEnvContainer {};
struct ParentEnv {};
// top-level definitions
struct DefFunction { VarPtr var; RoutinePtr routine; };
struct DefClass { VarPtr var; ClassPtr klass; AstPtr super_ref; };
struct DefInstance { VarPtr var; ClassPtr klass; AstPtr class_ref; std::vector<FieldInit> fields; };
struct DefSelector { VarPtr var; SelectorInfo info; AstPtr class_ref; std::vector<FieldInit> fields; };
struct DefFunMatcher { VarPtr var; std::shared_ptr<const FunMatcherDef> def; AstPtr function; };
struct DefTemplate { BindingPtr binding; };
struct Export { ExportKind kind; std::vector<ExportEntry> entries; };
} // namespace form

using Form = std::variant<
    form::VarRef, form::LongLit, form::StringLit, form::Nil, form::Quote, form::Apply,
    form::Send, form::Setq, form::Let, form::Letrec, form::Lambda, form::If, form::Cond,
    form::And, form::Or, form::Progn, form::Forever, form::Exit, form::Return, form::Multicall,
    form::Match, form::GetField, form::PutFields, form::Instance, form::Tuple, form::ListCtor,
    form::CodeChunk, form::PrimitiveCall, form::CIterInvoke, form::DebugMsg, form::AssertMsg,
    form::CompileWarning, form::CppIf, form::HostIf, form::CurrentEnvContainer,
    form::ParentEnv, form::DefFunction, form::DefClass, form::DefInstance, form::DefSelector,
    form::DefFunMatcher, form::DefTemplate, form::Export>;

struct Ast {
  Location where;
  Form form;
  CType ctype = CType::void_; // meaningful once normalized
  bool typed = false;

  template <class F> bool is() const { return std::holds_alternative<F>(form); }
  template <class F> F &as() { return std::get<F>(form); }
  template <class F> const F &as() const { return std::get<F>(form); }
};

template <class F> AstPtr make_ast(Location where, F f) {
  return std::make_shared<Ast>(Ast{std::move(where), Form(std::move(f))});
}

/// Variable reference, long or string literal, or nil.
bool is_atom(const Ast &a);

namespace pat {
struct Wildcard {};
struct Var { VarPtr var; };
struct Const { AstPtr expr; };
struct Matcher {
  BindingPtr matcher; // c-matcher or fun-matcher binding
  AstPtr funmatcher_ref; // runtime closure, fun-matchers only
  std::vector<AstPtr> inputs;
  std::vector<PatternPtr> subs;
};
struct FieldPat { FieldPtr field; PatternPtr sub; };
struct Instance { ClassPtr klass; AstPtr class_ref; std::vector<FieldPat> fields; };
struct And { std::vector<PatternPtr> conjuncts; };
struct Or { std::vector<PatternPtr> disjuncts; };
} // namespace pat

struct Pattern {
  Location where;
  std::variant<pat::Wildcard, pat::Var, pat::Const, pat::Matcher, pat::Instance, pat::And, pat::Or> node;
  CType ctype = CType::value; // c-type of the thing matched at this position

  template <class F> bool is() const { return std::holds_alternative<F>(node); }
  template <class F> F &as() { return std::get<F>(node); }
  template <class F> const F &as() const { return std::get<F>(node); }
};

template <class P> PatternPtr make_pattern(Location where, P p) {
  auto out = std::make_shared<Pattern>();
  out->where = std::move(where);
  out->node = std::move(p);
  return out;
}

/// Canonical s-expression rendering (temporaries print as `%tN`).
std::string to_string(const Ast &a);
std::string to_string(const Pattern &p);

} // namespace meltlite
