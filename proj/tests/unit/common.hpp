#pragma once

#include "meltlite/driver.hpp"
#include "meltlite/normcheck.hpp"
#include "meltlite/reader.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace testsupport {

using namespace meltlite;

inline ConstModuleEnvPtr stdenv() {
  register_stdlib_macros();
  return load_stdlib();
}

inline ExpandedModule expand_src(const std::string &src, const std::string &module = "t") {
  ExpandOptions eo;
  eo.module_name = module;
  return expand_unit(read_unit(src, "t.melt"), stdenv(), eo);
}

inline ModuleUnit normalize_src(const std::string &src) {
  return normalize_module(expand_src(src));
}

inline Translation translate_src(const std::string &src, Config cfg = {},
                                 const std::string &module = "t") {
  return translate_unit(read_unit(src, "t.melt"), module, "t.melt", cfg, stdenv());
}

inline const Routine *routine_named(const ModuleUnit &mu, const std::string &name) {
  for (const RoutinePtr &r : mu.routines)
    if (!r->is_start && r->name.valid() && r->name.name() == name)
      return r.get();
  return nullptr;
}

/// Body of a routine as one canonical string.
inline std::string body_text(const Routine &r) {
  std::string s;
  for (const AstPtr &a : r.body)
    s += (s.empty() ? "" : " ") + to_string(*a);
  return s;
}

/// Runs the whole translation; returns the diagnostic of the CompileError, or "".
inline std::string compile_error(const std::string &src, Phase *phase = nullptr) {
  try {
    translate_src(src);
  } catch (const CompileError &e) {
    if (phase)
      *phase = e.phase();
    return e.diagnostic();
  }
  return "";
}

inline bool contains(const std::string &hay, const std::string &needle) {
  return hay.find(needle) != std::string::npos;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / ("meltlite_unit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Exit status of a shell command, or -1 when it did not exit normally.
inline int run_status(const std::string &cmd) {
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

/// Checks a C99 file with the host compiler; returns the exit status.
inline int c_syntax_check(const std::filesystem::path &file, const std::string &extra = "") {
  std::string cmd = std::string(MELTLITE_C_COMPILER) +
                    " -std=c99 -Wall -Wextra -Werror -fsyntax-only -I" MELTLITE_RUNTIME_INCLUDE " " +
                    extra + " '" + file.string() + "' 2>&1";
  return run_status(cmd);
}

} // namespace testsupport
