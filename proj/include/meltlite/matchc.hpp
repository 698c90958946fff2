#pragma once

#include "meltlite/normalizer.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace meltlite {

enum class StepKind { test, fill, set_flag, flag_conj, success, fail };
enum class TestKind { matcher, instance, constant, identity };
enum class FillKind { matcher, funmatcher, field, bind };
enum class DataRole { root, extracted, hidden, flag };

/// A data node: the matched thing, an extracted sub-thing, or a flag.
struct MatchData {
  int id = 0;
  DataRole role = DataRole::extracted;
  CType ctype = CType::value;
  std::string key; // derivation, e.g. `out1:node_var_decl(d0)`
  VarPtr var;      // frame slot; null for the root
  int defining_step = -1;
};

struct MatchStep {
  int id = 0;
  StepKind kind = StepKind::fail;
  std::string key; // memo key of the elementary operation

  TestKind test = TestKind::matcher;
  FillKind fill = FillKind::matcher;
  int subject = -1;         // data node read
  BindingPtr matcher;       // c-matcher or fun-matcher
  AstPtr funmatcher_ref;    // closure of a fun-matcher
  std::vector<AstPtr> inputs;
  AstPtr constant;          // constant test
  VarPtr var;               // identity test, or bind target
  ClassPtr klass;           // instance test
  AstPtr class_ref;
  FieldPtr field;           // field fill
  std::vector<int> outputs; // data written
  std::vector<int> sources; // fun-matcher fill: hidden results copied
  int flag = -1;            // set_flag / flag_conj target
  std::vector<int> flags;   // flag_conj operands

  int then_step = -1, else_step = -1; // test
  int next = -1;                      // fill, set_flag, flag_conj
  int clause = -1;                    // success
};

/// Decision graph of one match expression.
struct MatchGraph {
  int entry = 0;
  std::vector<MatchStep> steps;
  std::vector<MatchData> data;
  int clauses = 0;
  std::vector<std::vector<VarPtr>> clause_vars;

  int count(StepKind k) const;
};

struct MatchCompileOptions {
  bool share = true; // memoize steps and skip known tests/fills
};

/// Compiles a normalized match. Data and flag slots are appended to
/// `routine.slots`. Throws CompileError (Phase::match).
std::shared_ptr<MatchGraph> compile_match(const form::Match &m, Routine &routine,
                                          const MatchCompileOptions &opts = {});

/// Compiles every match of a normalized module, storing the graph in each
/// Match node.
void compile_matches(ModuleUnit &unit);

/// Graphviz rendering; deterministic for equal graphs.
std::string emit_dot(const MatchGraph &g, const std::string &name = "match");

// ---------------------------------------------------------------------------
// Host-side interpretation of a graph, used by the property suites.

struct ThingRec;

/// Description of a matched thing: a long, or a reference (value or stuff)
/// compared by identity. A null reference is the cleared thing.
struct Thing {
  CType ctype = CType::value;
  long num = 0;
  std::shared_ptr<const ThingRec> ref;

  bool cleared() const { return ctype == CType::long_ ? num == 0 : !ref; }
  friend bool operator==(const Thing &a, const Thing &b) {
    if (a.ctype != b.ctype)
      return false;
    return a.ctype == CType::long_ ? a.num == b.num : a.ref == b.ref;
  }
};

/// Payload of a referenced thing: a tag (class or node kind), optional text
/// and number, and children (fields, node operands).
struct ThingRec {
  std::string tag;
  std::string text;
  long num = 0;
  std::vector<Thing> children;
};

std::string describe(const Thing &t);

/// Matcher behaviour for host-side interpretation.
class MatchSemantics {
public:
  virtual ~MatchSemantics() = default;
  /// c-matcher test; fun-matcher call returning success and its secondary results.
  virtual bool test(const Binding &matcher, const Thing &subject, const std::vector<Thing> &inputs,
                    std::vector<Thing> &results) = 0;
  /// c-matcher fill.
  virtual std::vector<Thing> fill(const Binding &matcher, const Thing &subject,
                                  const std::vector<Thing> &inputs) = 0;
  virtual bool is_a(const Thing &subject, const ClassInfo &cls) = 0;
  virtual Thing get_field(const Thing &object, const FieldInfo &field) = 0;
  /// Value of an atom (literal or variable) appearing in a pattern.
  virtual Thing eval(const Ast &atom) = 0;
};

struct MatchOutcome {
  std::optional<int> clause;
  std::map<SymbolId, Thing> bindings;
  int steps_run = 0;
};

MatchOutcome interpret(const MatchGraph &g, const Thing &subject, MatchSemantics &sem);

} // namespace meltlite
