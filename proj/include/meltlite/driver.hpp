#pragma once

#include "meltlite/cgen.hpp"
#include "meltlite/stdlib.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace meltlite {

enum ExitCode { exit_ok = 0, exit_translation = 1, exit_build = 2, exit_runtime = 3, exit_usage = 64 };

struct Config {
  std::string compiler_command; // `{in}` and `{out}` placeholders
  std::string work_dir = ".";
  std::string host_version = "1.0";
  bool debug = false;
  bool line_directives = true;
  int split_threshold = 64;
  bool dump_match = false;
  std::string stdlib_dir;   // empty: default_stdlib_dir()
  std::string include_dir;  // runtime headers
  std::string lib_dir;      // runtime libraries

  /// Defaults, then `MELTLITE_CC`, `MELTLITE_WORKDIR`, `MELTLITE_STDLIB_DIR`.
  static Config from_environment();
  std::string effective_stdlib_dir() const;
};

/// A translated module, not yet written.
struct Translation {
  std::string module_name;
  std::string source_path;
  std::vector<EmittedUnit> units;
  std::vector<std::pair<std::string, std::string>> dots; // file name, text
  std::vector<std::string> warnings;
};

/// Module name derived from a path: the file stem, mangled.
std::string module_name_for(const std::string &path);

/// Full pipeline over already-read s-expressions. Throws CompileError.
Translation translate_unit(const std::vector<SExpr> &unit, const std::string &module_name,
                           const std::string &source_path, const Config &cfg,
                           ConstModuleEnvPtr parent);

/// Full pipeline over a file, against the stdlib.
Translation translate_file(const std::string &path, const Config &cfg);

/// The stdlib itself as a module.
Translation translate_stdlib(const Config &cfg);

/// Writes `text` to a temporary sibling of `path` then renames it.
void write_file_atomic(const std::string &path, const std::string &text);

/// Writes every unit (and dot file) into the work directory; returns the paths.
std::vector<std::string> write_translation(const Translation &t, const Config &cfg);

/// `@deffn` records for every definition of the inputs, in definition order.
std::string render_doc(const std::vector<std::string> &inputs, const Config &cfg);

int cmd_translate(const std::vector<std::string> &inputs, const Config &cfg, std::ostream &out,
                  std::ostream &err);
int cmd_doc(const std::vector<std::string> &inputs, const std::string &output, const Config &cfg,
            std::ostream &out, std::ostream &err);
int cmd_dump_match(const std::vector<std::string> &inputs, const Config &cfg, std::ostream &out,
                   std::ostream &err);
int cmd_run(const std::string &input, const std::string &mode, const Config &cfg,
            std::ostream &out, std::ostream &err);

} // namespace meltlite
