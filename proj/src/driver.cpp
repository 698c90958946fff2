#include "meltlite/driver.hpp"

#include "meltlite/reader.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef MELTLITE_RUNTIME_INCLUDE_DIR
#define MELTLITE_RUNTIME_INCLUDE_DIR "runtime/include"
#endif
#ifndef MELTLITE_RUNTIME_LIB_DIR
#define MELTLITE_RUNTIME_LIB_DIR "."
#endif

namespace fs = std::filesystem;

namespace meltlite {

namespace {

std::string env_or(const char *name, const std::string &fallback) {
  const char *v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string shell_quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string replace_all(std::string s, const std::string &from, const std::string &to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

std::string two_digits(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

} // namespace

Config Config::from_environment() {
  Config c;
  c.include_dir = env_or("MELTLITE_INCLUDE_DIR", MELTLITE_RUNTIME_INCLUDE_DIR);
  c.lib_dir = env_or("MELTLITE_LIB_DIR", MELTLITE_RUNTIME_LIB_DIR);
  c.compiler_command = env_or(
      "MELTLITE_CC", "cc -O1 -fPIC -shared {in} -o {out} -I" + shell_quote(c.include_dir) +
                         " -L" + shell_quote(c.lib_dir) + " -Wl,-rpath," +
                         shell_quote(c.lib_dir) + " -lmeltlite_rt -lmeltlite_hostir");
  c.work_dir = env_or("MELTLITE_WORKDIR", ".");
  c.stdlib_dir = env_or("MELTLITE_STDLIB_DIR", "");
  return c;
}

std::string Config::effective_stdlib_dir() const {
  return stdlib_dir.empty() ? default_stdlib_dir() : stdlib_dir;
}

std::string module_name_for(const std::string &path) {
  std::string stem = fs::path(path).stem().string();
  if (stem.empty())
    stem = "module";
  return mangle(stem);
}

Translation translate_unit(const std::vector<SExpr> &unit, const std::string &module_name,
                           const std::string &source_path, const Config &cfg,
                           ConstModuleEnvPtr parent) {
  register_stdlib_macros();
  ExpandOptions eo;
  eo.module_name = module_name;
  eo.host_version = cfg.host_version;
  ExpandedModule em = expand_unit(unit, std::move(parent), eo);

  Translation t;
  t.module_name = module_name;
  t.source_path = source_path;
  t.warnings = em.warnings;

  ModuleUnit mu = normalize_module(std::move(em));
  compile_matches(mu);
  t.warnings.insert(t.warnings.end(), mu.warnings.begin(), mu.warnings.end());

  EmitCtx ec;
  ec.module_name = module_name;
  ec.line_directives = cfg.line_directives;
  ec.split_threshold = cfg.split_threshold;
  ec.host_version = cfg.host_version;
  ec.predefined = predefined_map();
  t.units = emit_module(mu, ec);
  t.warnings.insert(t.warnings.end(), ec.warnings.begin(), ec.warnings.end());

  if (cfg.dump_match)
    for (std::size_t i = 0; i < mu.match_graphs.size(); ++i) {
      std::string name = module_name + "_match" + two_digits(i);
      t.dots.emplace_back(module_name + "+match" + two_digits(i) + ".dot",
                          emit_dot(*mu.match_graphs[i], name));
    }
  return t;
}

Translation translate_file(const std::string &path, const Config &cfg) {
  ConstModuleEnvPtr parent = load_stdlib(nullptr, cfg.effective_stdlib_dir());
  return translate_unit(read_file(path), module_name_for(path), path, cfg, parent);
}

Translation translate_stdlib(const Config &cfg) {
  register_stdlib_macros();
  std::string dir = cfg.effective_stdlib_dir();
  return translate_unit(read_stdlib_sources(dir), stdlib_module_name, dir, cfg,
                        manifest_env());
}

void write_file_atomic(const std::string &path, const std::string &text) {
  fs::path target(path);
  if (target.has_parent_path())
    fs::create_directories(target.parent_path());
  static std::atomic<unsigned> counter{0};
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid()) + "_" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

std::vector<std::string> write_translation(const Translation &t, const Config &cfg) {
  std::vector<std::string> paths;
  for (const EmittedUnit &u : t.units) {
    std::string p = (fs::path(cfg.work_dir) / u.file_name).string();
    write_file_atomic(p, u.text);
    paths.push_back(p);
  }
  for (const auto &[name, text] : t.dots) {
    std::string p = (fs::path(cfg.work_dir) / name).string();
    write_file_atomic(p, text);
    paths.push_back(p);
  }
  return paths;
}

// ------------------------------------------------------------------ doc

namespace {

std::string texi_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '@' || c == '{' || c == '}')
      out += '@';
    out += c;
  }
  return out;
}

std::string format_formals(const FormalList &fl, bool lambda_like) {
  std::string out = "(";
  CType cur = CType::value;
  bool first = true;
  for (const Formal &f : fl) {
    if (!first)
      out += ' ';
    if (f.ctype != cur || (first && !lambda_like && f.ctype != CType::value)) {
      out += ":" + std::string(keyword_name(f.ctype)) + " ";
      cur = f.ctype;
    }
    out += f.name.name();
    first = false;
  }
  return out + ")";
}

std::string render_docstring(const std::optional<MacroString> &doc) {
  if (!doc)
    return "";
  std::string out;
  for (const MacroChunk &c : doc->chunks) {
    if (c.is_text())
      out += texi_escape(c.text());
    else
      out += "@var{" + texi_escape(c.ref().symbol.name()) + "}";
  }
  return out;
}

std::string signature_of(const Binding &b) {
  switch (b.kind) {
  case BindingKind::primitive:
    return format_formals(b.primitive->formals, false) + " :" +
           std::string(keyword_name(b.primitive->result));
  case BindingKind::citerator:
    return format_formals(b.citerator->inputs, false) + " " + b.citerator->state.name() + " " +
           format_formals(b.citerator->locals, false);
  case BindingKind::cmatcher:
    return format_formals(b.cmatcher->inputs, false) + " " +
           format_formals(b.cmatcher->outputs, false);
  case BindingKind::funmatcher:
    return format_formals(b.funmatcher->inputs, false) + " " +
           format_formals(b.funmatcher->outputs, false);
  case BindingKind::function:
    return b.function_formals ? format_formals(*b.function_formals, true) : "()";
  case BindingKind::klass: {
    std::string s;
    if (b.klass->super)
      s += ":super " + b.klass->super->name.name();
    if (!b.klass->own_fields.empty()) {
      s += s.empty() ? ":fields (" : " :fields (";
      for (std::size_t i = 0; i < b.klass->own_fields.size(); ++i)
        s += (i ? " " : "") + b.klass->own_fields[i]->name.name();
      s += ")";
    }
    return s;
  }
  case BindingKind::selector:
    return b.selector && b.selector->formals ? format_formals(*b.selector->formals, true) : "";
  case BindingKind::instance:
    return b.klass ? ":class " + b.klass->name.name() : "";
  default:
    return "";
  }
}

} // namespace

std::string render_doc(const std::vector<std::string> &inputs, const Config &cfg) {
  register_stdlib_macros();
  std::ostringstream os;
  os << "@c generated by meltlite doc; do not edit\n";
  for (const std::string &in : inputs) {
    ExpandOptions eo;
    eo.module_name = module_name_for(in);
    eo.host_version = cfg.host_version;
    ExpandedModule em;
    bool is_stdlib = fs::path(in).extension() != ".melt" && fs::is_directory(in);
    if (is_stdlib)
      em = expand_stdlib(in);
    else
      em = expand_unit(read_file(in), load_stdlib(nullptr, cfg.effective_stdlib_dir()), eo);
    os << "\n@c module " << texi_escape(em.name) << " from " << texi_escape(in) << "\n";
    for (const BindingPtr &b : em.defined) {
      if (b->kind == BindingKind::field)
        continue;
      std::string sig = signature_of(*b);
      os << "@deffn {" << binding_kind_name(b->kind) << "} " << texi_escape(b->name.name());
      if (!sig.empty())
        os << " " << texi_escape(sig);
      os << "\n";
      std::string body = render_docstring(b->doc);
      if (!body.empty())
        os << body << "\n";
      os << "@end deffn\n";
    }
  }
  return os.str();
}

// ------------------------------------------------------------- commands

namespace {

template <class F> int guarded(std::ostream &err, F &&f) {
  try {
    return f();
  } catch (const CompileError &e) {
    err << e.diagnostic() << "\n";
    return exit_translation;
  } catch (const fs::filesystem_error &e) {
    err << "meltlite: " << e.what() << "\n";
    return exit_translation;
  } catch (const std::runtime_error &e) {
    err << "meltlite: " << e.what() << "\n";
    return exit_translation;
  }
}

void print_warnings(const Translation &t, std::ostream &err) {
  for (const std::string &w : t.warnings)
    err << w << "\n";
}

} // namespace

int cmd_translate(const std::vector<std::string> &inputs, const Config &cfg, std::ostream &out,
                  std::ostream &err) {
  return guarded(err, [&] {
    // translate everything first so that no unit is written when any input fails
    std::vector<Translation> done;
    for (const std::string &in : inputs) {
      done.push_back(translate_file(in, cfg));
      print_warnings(done.back(), err);
    }
    for (const Translation &t : done)
      for (const std::string &p : write_translation(t, cfg))
        out << p << "\n";
    return int(exit_ok);
  });
}

int cmd_doc(const std::vector<std::string> &inputs, const std::string &output, const Config &cfg,
            std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    std::string text = render_doc(inputs, cfg);
    std::string path = output;
    if (path.empty())
      path = (fs::path(cfg.work_dir) /
              (inputs.empty() ? std::string("meltlite") : module_name_for(inputs.front())))
                 .string() +
             ".texi";
    write_file_atomic(path, text);
    out << path << "\n";
    return int(exit_ok);
  });
}

int cmd_dump_match(const std::vector<std::string> &inputs, const Config &cfg, std::ostream &out,
                   std::ostream &err) {
  return guarded(err, [&] {
    Config c = cfg;
    c.dump_match = true;
    for (const std::string &in : inputs) {
      Translation t = translate_file(in, c);
      for (const auto &[name, text] : t.dots) {
        std::string p = (fs::path(c.work_dir) / name).string();
        write_file_atomic(p, text);
        out << p << "\n";
      }
    }
    return int(exit_ok);
  });
}

// ------------------------------------------------------------------ run

namespace {

struct RuntimeApi {
  void *(*ctx_create)(std::size_t) = nullptr;
  void (*ctx_destroy)(void *) = nullptr;
  void (*set_debug)(void *, int) = nullptr;
  void *(*mode_handler)(void *, const char *) = nullptr;
  const char *(*mode_name)(void *, int) = nullptr;
  void *(*apply)(void *, void *, void *, const char *, void *, const char *, void *) = nullptr;
};

template <class T> bool load_symbol(void *h, const char *name, T &slot) {
  slot = reinterpret_cast<T>(dlsym(h, name));
  return slot != nullptr;
}

} // namespace

int cmd_run(const std::string &input, const std::string &mode, const Config &cfg,
            std::ostream &out, std::ostream &err) {
  Translation lib, user;
  int rc = guarded(err, [&] {
    lib = translate_stdlib(cfg);
    user = translate_file(input, cfg);
    print_warnings(user, err);
    return int(exit_ok);
  });
  if (rc != exit_ok)
    return rc;
  if (user.module_name == stdlib_module_name) {
    err << "meltlite: module name " << user.module_name << " is reserved\n";
    return exit_translation;
  }

  // a private directory per run keeps concurrent runs apart
  fs::create_directories(cfg.work_dir);
  std::string tmpl = (fs::path(cfg.work_dir) / "meltlite-run-XXXXXX").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  if (!::mkdtemp(buf.data())) {
    err << "meltlite: cannot create a run directory in " << cfg.work_dir << "\n";
    return exit_build;
  }
  Config rcfg = cfg;
  rcfg.work_dir = buf.data();
  rcfg.dump_match = false;
  std::vector<std::string> sources;
  try {
    for (const Translation *t : {&lib, &user})
      for (const std::string &p : write_translation(*t, rcfg))
        if (fs::path(p).extension() == ".c")
          sources.push_back(p);
  } catch (const std::exception &e) {
    err << "meltlite: " << e.what() << "\n";
    return exit_build;
  }
  std::string so = (fs::path(rcfg.work_dir) / (user.module_name + ".so")).string();
  std::string in;
  for (const std::string &s : sources)
    in += (in.empty() ? "" : " ") + shell_quote(s);
  std::string cmd = replace_all(replace_all(cfg.compiler_command, "{in}", in), "{out}",
                                shell_quote(so));
  if (cfg.debug)
    err << "meltlite: " << cmd << "\n";
  out.flush();
  if (std::system(cmd.c_str()) != 0) {
    err << "meltlite: building " << so << " failed\n";
    return exit_build;
  }

  void *h = ::dlopen(fs::absolute(so).c_str(), RTLD_NOW | RTLD_GLOBAL);
  if (!h) {
    err << "meltlite: cannot load " << so << ": " << ::dlerror() << "\n";
    return exit_build;
  }
  RuntimeApi rt;
  using StartFn = void *(*)(void *, void *);
  StartFn lib_start = nullptr, user_start = nullptr;
  bool ok = load_symbol(h, "mlt_ctx_create", rt.ctx_create) &&
            load_symbol(h, "mlt_ctx_destroy", rt.ctx_destroy) &&
            load_symbol(h, "mlt_set_debug", rt.set_debug) &&
            load_symbol(h, "mlt_mode_handler", rt.mode_handler) &&
            load_symbol(h, "mlt_mode_name", rt.mode_name) &&
            load_symbol(h, "mlt_apply", rt.apply) &&
            load_symbol(h, entry_symbol(lib.module_name).c_str(), lib_start) &&
            load_symbol(h, entry_symbol(user.module_name).c_str(), user_start);
  if (!ok) {
    err << "meltlite: " << so << " lacks an entry point: " << ::dlerror() << "\n";
    return exit_build;
  }

  void *ctx = rt.ctx_create(0);
  if (!ctx) {
    err << "meltlite: cannot create a runtime context\n";
    return exit_runtime;
  }
  rt.set_debug(ctx, cfg.debug ? 1 : 0);
  void *libenv = lib_start(ctx, nullptr);
  void *env = user_start(ctx, libenv);
  std::fflush(stdout);
  int status = exit_ok;
  if (!mode.empty() && mode != "none") {
    void *handler = rt.mode_handler(ctx, mode.c_str());
    if (!handler) {
      err << "meltlite: no handler for mode " << mode << "; known modes:";
      for (int i = 0; const char *n = rt.mode_name(ctx, i); ++i)
        err << " " << n;
      err << "\n";
      status = exit_runtime;
    } else {
      rt.apply(ctx, handler, env, "", nullptr, "", nullptr);
      std::fflush(stdout);
    }
  }
  rt.ctx_destroy(ctx);
  return status;
}

} // namespace meltlite
