#pragma once

#include "meltlite/expander.hpp"

#include <string>
#include <vector>

namespace meltlite {

struct ManifestClass {
  std::string name;
  std::string super; // empty for class_root
  std::vector<std::string> fields;
  int predef_slot;
};

struct ManifestDiscr {
  std::string name;
  int predef_slot;
};

/// Builtin part of the standard library: what the runtime predefines.
struct StdlibManifest {
  std::vector<CType> ctypes;
  std::vector<ManifestClass> classes;  // superclasses first
  std::vector<ManifestDiscr> discriminants;
  std::vector<std::string> sources;    // .melt files of the library, load order
};

const StdlibManifest &stdlib_manifest();

/// name -> predefined slot, for every manifest class and discriminant.
std::map<std::string, int> predefined_map();

/// `MELTLITE_STDLIB_DIR` from the environment, else the build-time location.
std::string default_stdlib_dir();

/// Registers the host macro and pattern-macro expanders. Idempotent.
void register_stdlib_macros();

/// Environment binding the manifest classes, fields and discriminants, layered
/// over `root`. Throws std::logic_error on a duplicate manifest name.
ModuleEnvPtr manifest_env(ConstModuleEnvPtr root = nullptr);

/// Reads every stdlib source of `dir` as one unit.
std::vector<SExpr> read_stdlib_sources(const std::string &dir);

/// Expands the stdlib sources as the module `meltlite_stdlib` over the
/// manifest environment.
ExpandedModule expand_stdlib(const std::string &dir, ConstModuleEnvPtr root = nullptr,
                             const ExpandOptions &opts = {});

/// Environment exported by the stdlib; parent of user modules. Cached per
/// directory when `root` is null.
ConstModuleEnvPtr load_stdlib(ConstModuleEnvPtr root = nullptr,
                              const std::string &dir = default_stdlib_dir());

inline constexpr const char *stdlib_module_name = "meltlite_stdlib";

} // namespace meltlite
