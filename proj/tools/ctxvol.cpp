// ctxvol: context volatility of terms in time-stamped document collections.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctxvol/ctxvol.hpp"

namespace {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_input = 3,
  exit_partial = 4,
};

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  std::string output;
  int history = 0;
};

void add_common(CLI::App *cmd, CommonOptions &opt) {
  cmd->add_option("-c,--config", opt.config_path, "key = value configuration file");
  cmd->add_option("-s,--set", opt.overrides, "override a configuration key (key=value), repeatable");
  cmd->add_option("-j,--workers", opt.workers, "worker threads");
  cmd->add_option("-o,--output", opt.output, "output directory");
  cmd->add_option("--history", opt.history, "history h in slices");
}

// file < environment < flags
ctxvol::PipelineConfig resolve_config(const CommonOptions &opt) {
  ctxvol::PipelineConfig cfg;
  if (!opt.config_path.empty()) ctxvol::load_config_file(cfg, opt.config_path);
  ctxvol::apply_environment(cfg);
  for (const auto &kv : opt.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ctxvol::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.workers > 0) cfg.workers = static_cast<unsigned>(opt.workers);
  if (!opt.output.empty()) cfg.output = opt.output;
  if (opt.history > 0) cfg.volatility.history = static_cast<std::size_t>(opt.history);
  return cfg;
}

void print_skipped(const std::vector<std::string> &skipped) {
  if (skipped.empty()) return;
  std::cout << "skipped terms:\n";
  for (const auto &t : skipped) std::cout << "  " << t << '\n';
}

template <class F> int guarded(F &&f) {
  try {
    return f();
  } catch (const ctxvol::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ctxvol::InputError &e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_input;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"ctxvol - context volatility of terms in diachronic corpora"};
  app.require_subcommand(1);

  CommonOptions analyze_opt, terms_opt, graph_opt, validate_opt;

  auto *analyze = app.add_subcommand("analyze", "run the full pipeline and write all reports");
  add_common(analyze, analyze_opt);

  auto *terms = app.add_subcommand("terms", "aligned volatility/frequency series per term");
  add_common(terms, terms_opt);
  std::vector<std::string> term_list;
  bool plot = false;
  terms->add_option("-t,--term,terms", term_list, "terms to report")->required();
  terms->add_flag("--plot", plot, "also write an SVG overlay per term");

  auto *graph = app.add_subcommand("graph", "context graph edge list of a word in one slice");
  add_common(graph, graph_opt);
  std::string word, graph_out;
  std::size_t slice = 0;
  graph->add_option("-w,--word", word, "word")->required();
  graph->add_option("--slice", slice, "slice index (0-based)")->required();
  graph->add_option("--out", graph_out, "edge list path (default <output>/graph_<word>_<slice>.csv)");

  auto *validate = app.add_subcommand("validate-config", "check a configuration and print it normalized");
  add_common(validate, validate_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  if (*analyze) {
    return guarded([&] {
      auto cfg = resolve_config(analyze_opt);
      auto result = ctxvol::run_analyze(cfg);
      std::cout << "analyzed " << result.slices << " slices, vocabulary " << result.vocabulary << ", "
                << result.wall_seconds << " s\n";
      for (const auto &f : result.files) std::cout << "  " << f.string() << '\n';
      print_skipped(result.skipped_terms);
      return result.skipped_terms.empty() ? exit_ok : exit_partial;
    });
  }
  if (*terms) {
    return guarded([&] {
      auto cfg = resolve_config(terms_opt);
      auto result = ctxvol::run_terms(cfg, term_list, plot);
      for (const auto &f : result.files) std::cout << f.string() << '\n';
      print_skipped(result.skipped_terms);
      return result.skipped_terms.empty() ? exit_ok : exit_partial;
    });
  }
  if (*graph) {
    return guarded([&] {
      auto cfg = resolve_config(graph_opt);
      std::filesystem::path out =
          graph_out.empty() ? cfg.output / ("graph_" + word + "_" + std::to_string(slice) + ".csv") : std::filesystem::path(graph_out);
      auto edges = ctxvol::run_graph(cfg, word, slice, out);
      std::cout << out.string() << ": " << edges << " edges\n";
      return exit_ok;
    });
  }
  return guarded([&] {
    auto cfg = resolve_config(validate_opt);
    cfg.validate();
    ctxvol::write_config_file(cfg, std::cout);
    return exit_ok;
  });
}
