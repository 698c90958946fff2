#pragma once

#include "meltlite/matchc.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace meltlite {

/// Outcome of the reference matcher.
struct OracleResult {
  std::optional<int> clause;
  std::map<SymbolId, Thing> bindings;
};

/// Naive matcher: clauses in order, each pattern walked top-down and left to
/// right; disjunctions are retried when a later part of the clause fails.
OracleResult oracle_match(const std::vector<MatchClause> &clauses, const Thing &subject,
                          MatchSemantics &sem);

// ---------------------------------------------------------------------------
// Host-side descriptions of the things stdlib matchers inspect.
//
// hnode tags: var_decl (name, type), record_type (name, fields...), field_decl
// (name, type), identifier (text child), integer_cst (num), array_type (elem,
// index), integer_type (min, max, size), array_ref (base, index),
// component_ref (decl, field). hstmt tags: assign_single (lhs, rhs), nop.
// value tags: integer, string (text child), pair (head, tail), tuple, or a
// class name with one child per field.

namespace things {
Thing cleared(CType t);
Thing num(long n);
Thing cstring(const std::string &text);
Thing node(const std::string &tag, std::vector<Thing> children = {}, long n = 0);
Thing identifier(const std::string &text);
Thing integer_cst(long n);
Thing stmt(const std::string &tag, std::vector<Thing> children = {});
Thing boxed_integer(long n);
Thing boxed_string(const std::string &text);
Thing object(const std::string &class_name, std::vector<Thing> fields);
Thing value(const std::string &tag, std::vector<Thing> children = {});
} // namespace things

/// Semantics of the stdlib matchers over thing descriptions, mirroring their
/// C templates. Pattern variables read by matcher inputs are looked up in
/// `env`; classes are known by name through `add_class`.
class StdlibMatchSemantics : public MatchSemantics {
public:
  bool test(const Binding &matcher, const Thing &subject, const std::vector<Thing> &inputs,
            std::vector<Thing> &results) override;
  std::vector<Thing> fill(const Binding &matcher, const Thing &subject,
                          const std::vector<Thing> &inputs) override;
  bool is_a(const Thing &subject, const ClassInfo &cls) override;
  Thing get_field(const Thing &object, const FieldInfo &field) override;
  Thing eval(const Ast &atom) override;

  void add_class(ClassPtr cls);
  std::map<std::uint32_t, Thing> env; // variable uid -> thing

private:
  std::map<std::string, ClassPtr> classes_;
  std::map<std::string, Thing> strings_; // one cstring per literal text
};

// ---------------------------------------------------------------------------
// A-normal form

/// Describes every place where a normalized routine breaks A-normal form:
/// non-atomic operands, untyped nodes, leftover cond/and/or.
std::vector<std::string> anf_violations(const Routine &r);
std::vector<std::string> anf_violations(const Ast &a);

// ---------------------------------------------------------------------------
// Random match cases

struct MatchCase {
  std::string source; // a module defining `(defun probe (x) (match x ...))` or similar
  CType subject_ctype = CType::value;
  Thing subject;
};

/// Random clauses of depth at most `max_depth` over stdlib matchers, with a
/// subject built so that some clauses are likely to match.
MatchCase random_match_case(std::mt19937_64 &rng, int max_depth = 3);

/// The compiled match of the `probe` function of a translated case.
struct ProbeMatch {
  ModuleUnit unit;
  const form::Match *match = nullptr;
};

/// Expands, normalizes and match-compiles `source` against `parent`, then
/// locates the first match expression. Throws CompileError.
ProbeMatch compile_probe(const std::string &source, ConstModuleEnvPtr parent,
                         const MatchCompileOptions &opts = {});

} // namespace meltlite
