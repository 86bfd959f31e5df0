// varlab: run the diagnostic, regularity, prox and survey suites over a corpus.

#include "varlab/corpus.hpp"
#include "varlab/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generalized derivative and regularity diagnostics"};
  std::string corpus_path = "builtin";
  std::string command = "all";
  std::uint64_t seed = 0;
  double tol_eq = varlab::kEqTol;
  std::string report_path;
  std::string format = "json";
  bool timings = false;

  app.add_option("--corpus", corpus_path, "corpus file, or 'builtin'");
  app.add_option("--command", command, "diagnose | regularity | prox | survey | all")
      ->check(CLI::IsMember(varlab::known_commands()));
  app.add_option("--seed", seed, "master seed");
  app.add_option("--tol-eq", tol_eq, "tolerance for numeric expectations")->check(CLI::PositiveNumber);
  app.add_option("--report", report_path, "write the report here instead of stdout");
  app.add_option("--format", format, "json | text")->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--timings", timings, "include per-instance wall times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::vector<varlab::CorpusInstance> corpus;
  try {
    corpus = varlab::load_corpus(corpus_path);
  } catch (const varlab::CorpusError& e) {
    std::cerr << "varlab: " << e.what() << "\n";
    return 3;
  }

  varlab::Report report;
  try {
    report = varlab::run(command, corpus, {seed, tol_eq, timings});
  } catch (const varlab::UsageError& e) {
    std::cerr << "varlab: " << e.what() << "\n";
    return 2;
  }

  const std::string text = varlab::render(report, format);
  if (report_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "varlab: cannot write '" << report_path << "'\n";
      return 2;
    }
    out << text;
  }
  if (report.exit_code() != 0)
    std::cerr << "varlab: " << report.mismatches << " mismatch(es), " << report.inconsistencies << " inconsistency(ies), "
              << report.errors << " error(s)\n";
  return report.exit_code();
}
