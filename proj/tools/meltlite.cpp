// meltlite: translate DSL modules to C, build and run them, extract documentation.

#include "meltlite/driver.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  using namespace meltlite;
  Config cfg = Config::from_environment();

  CLI::App app{"meltlite: a Lisp dialect translated to C"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  bool no_line = false;
  auto common = [&](CLI::App *sub) {
    sub->add_option("--work-dir", cfg.work_dir, "Directory receiving generated files");
    sub->add_option("--host-version", cfg.host_version, "Host version string tested by hostif");
    sub->add_option("--split,--split-threshold", cfg.split_threshold,
                    "Routines per generated unit")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--no-line-directives,--no-line", no_line, "Omit #line directives");
    sub->add_flag("--dump-match", cfg.dump_match, "Write a Graphviz file per match expression");
    sub->add_flag("--debug", cfg.debug, "Enable runtime debug printing");
    sub->add_option("--stdlib", cfg.stdlib_dir, "Directory of the standard library sources");
  };

  std::vector<std::string> inputs;
  std::string mode = "none";
  std::string doc_output;

  CLI::App *translate = app.add_subcommand("translate", "Translate modules to C units");
  translate->add_option("files", inputs, "Source files")->required()->check(CLI::ExistingFile);
  common(translate);

  CLI::App *run = app.add_subcommand("run", "Translate, build, load and run a module");
  std::string run_input;
  run->add_option("file", run_input, "Source file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "Mode handler to invoke after loading");
  common(run);

  CLI::App *doc = app.add_subcommand("doc", "Generate @deffn documentation");
  doc->add_option("files", inputs, "Source files, or the stdlib directory")
      ->required()
      ->check(CLI::ExistingPath);
  doc->add_option("-o,--output", doc_output, "Output file");
  common(doc);

  CLI::App *dump = app.add_subcommand("dump-match", "Write the decision graph of every match");
  dump->add_option("files", inputs, "Source files")->required()->check(CLI::ExistingFile);
  common(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : int(exit_usage);
  }
  cfg.line_directives = !no_line;

  if (*translate)
    return cmd_translate(inputs, cfg, std::cout, std::cerr);
  if (*run)
    return cmd_run(run_input, mode, cfg, std::cout, std::cerr);
  if (*doc)
    return cmd_doc(inputs, doc_output, cfg, std::cout, std::cerr);
  return cmd_dump_match(inputs, cfg, std::cout, std::cerr);
}
