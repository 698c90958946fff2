#include "common.hpp"

using namespace testsupport;
namespace fs = std::filesystem;

namespace {

fs::path write_source(const fs::path &dir, const std::string &name, const std::string &text) {
  fs::path p = dir / name;
  write_file_atomic(p.string(), text);
  return p;
}

std::string cli(const std::string &args) {
  return std::string("'" MELTLITE_CLI "' ") + args + " >/dev/null 2>&1";
}

} // namespace

TEST_SUITE("driver") {

TEST_CASE("atomic writes replace the whole file") {
  fs::path dir = scratch_dir("atomic");
  fs::path p = dir / "sub" / "f.txt";
  write_file_atomic(p.string(), "first version, rather long");
  write_file_atomic(p.string(), "second");
  CHECK(slurp(p) == "second");
  int entries = 0;
  for (auto &e : fs::directory_iterator(dir / "sub")) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  CHECK_THROWS(write_file_atomic((dir / "sub" / "f.txt" / "x").string(), "y"));
  fs::remove_all(dir);
}

TEST_CASE("translate writes one file per unit") {
  fs::path dir = scratch_dir("translate");
  fs::path src = write_source(dir, "two-parts.melt", "(defun a (v) v)\n(defun b (v) v)\n");
  Config cfg;
  cfg.work_dir = (dir / "out").string();
  cfg.split_threshold = 1;
  std::ostringstream out, err;
  CHECK(cmd_translate({src.string()}, cfg, out, err) == exit_ok);
  CHECK(err.str().empty());
  CHECK(fs::exists(dir / "out" / "two_parts+00.c"));
  CHECK(fs::exists(dir / "out" / "two_parts+01.c"));
  CHECK(contains(out.str(), "two_parts+01.c\n"));
  fs::remove_all(dir);
}

TEST_CASE("a translation error writes nothing and exits with 1") {
  fs::path dir = scratch_dir("bad");
  fs::path good = write_source(dir, "good.melt", "(defun a (v) v)\n");
  fs::path bad = write_source(dir, "bad.melt", "(defun a (v)\n  (nosuch v))\n");
  Config cfg;
  cfg.work_dir = (dir / "out").string();
  std::ostringstream out, err;
  CHECK(cmd_translate({good.string(), bad.string()}, cfg, out, err) == exit_translation);
  CHECK(contains(err.str(), "bad.melt:2:4: expansion error: unbound function or operator nosuch"));
  CHECK_FALSE(fs::exists(dir / "out" / "good+00.c"));
  fs::remove_all(dir);
}

TEST_CASE("dump-match writes a graph per match") {
  fs::path dir = scratch_dir("dump");
  Config cfg;
  cfg.work_dir = dir.string();
  std::ostringstream out, err;
  REQUIRE(cmd_dump_match({std::string(MELTLITE_TEST_DATA_DIR) + "/matches.melt"}, cfg, out, err) ==
          exit_ok);
  CHECK(fs::exists(dir / "matches+match00.dot"));
  CHECK(fs::exists(dir / "matches+match03.dot"));
  CHECK(contains(slurp(dir / "matches+match00.dot"), "digraph matches_match00 {"));
  fs::remove_all(dir);
}

TEST_CASE("doc renders definitions in order") {
  fs::path dir = scratch_dir("doc");
  fs::path src = write_source(dir, "d.melt",
                              "(defun add (v :long a b) :doc #{Adds $a and {b}.}# (+i a b))\n"
                              "(defclass class_pt :super class_named :fields (px))\n");
  Config cfg;
  std::string texi = render_doc({src.string()}, cfg);
  std::size_t f = texi.find("@deffn {function} add (v :long a b)\nAdds @var{a} and @{b@}.\n@end deffn\n");
  std::size_t c = texi.find("@deffn {class} class_pt :super class_named :fields (px)\n@end deffn\n");
  CHECK(f != std::string::npos);
  CHECK(c != std::string::npos);
  CHECK(f < c);
  CHECK_FALSE(contains(texi, "{field}"));

  std::ostringstream out, err;
  cfg.work_dir = dir.string();
  CHECK(cmd_doc({src.string()}, "", cfg, out, err) == exit_ok);
  CHECK(slurp(dir / "d.texi") == texi);
  fs::remove_all(dir);
}

TEST_CASE("stdlib documentation") {
  Config cfg;
  std::string texi = render_doc({cfg.effective_stdlib_dir()}, cfg);
  CHECK(contains(texi, "@c module meltlite_stdlib"));
  CHECK(contains(texi, "@deffn {function} list_reverse"));
}

TEST_CASE("run reports a failed build") {
  fs::path dir = scratch_dir("run");
  fs::path src = write_source(dir, "r.melt", "(defun a (v) v)\n");
  Config cfg;
  cfg.work_dir = dir.string();
  cfg.compiler_command = "false {in} {out}";
  std::ostringstream out, err;
  CHECK(cmd_run(src.string(), "none", cfg, out, err) == exit_build);
  CHECK(contains(err.str(), "failed"));
  fs::path reserved = write_source(dir, "meltlite_stdlib.melt", "(defun a (v) v)\n");
  CHECK(cmd_run(reserved.string(), "none", cfg, out, err) == exit_translation);
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
  fs::path dir = scratch_dir("cli");
  fs::path good = write_source(dir, "g.melt", "(defun a (v) v)\n");
  fs::path bad = write_source(dir, "b.melt", "(defun a (v) (nosuch v))\n");
  std::string wd = " --work-dir '" + dir.string() + "'";
  CHECK(run_status(cli("translate '" + good.string() + "'" + wd)) == 0);
  CHECK(fs::exists(dir / "g+00.c"));
  CHECK(run_status(cli("translate '" + bad.string() + "'" + wd)) == 1);
  CHECK(run_status(cli("translate")) == 64);
  CHECK(run_status(cli("frobnicate")) == 64);
  CHECK(run_status(cli("translate --split 0 '" + good.string() + "'")) == 64);
  CHECK(run_status(cli("--help")) == 0);
  fs::remove_all(dir);
}

} // TEST_SUITE
