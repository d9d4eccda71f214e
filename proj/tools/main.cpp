#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "riskpred/experiment.hpp"

namespace {

using riskpred::cli::ConfigError;
using riskpred::cli::ExperimentConfig;
using riskpred::cli::RunReport;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<double> alpha;
  std::optional<std::string> model_kind;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON experiment config file");
  cmd->add_option("--seed", opt.seed, "global seed (overrides config)");
  cmd->add_option("--output-dir", opt.output_dir, "output directory (overrides config)");
  cmd->add_option("--alpha", opt.alpha, "transfer mixing weight (overrides config)");
  cmd->add_option("--model-kind", opt.model_kind,
                  "GBDT | UNDERBAG | SMOTEBAG | RUSBOOST | SMOTEBOOST");
  cmd->add_option("--threads", opt.threads, "worker thread cap (overrides config)");
}

ExperimentConfig build_config(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config_path.empty()
                             ? riskpred::cli::parse_config(nlohmann::json::object())
                             : riskpred::cli::load_config(opt.config_path);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.output_dir) cfg.output_dir = *opt.output_dir;
  if (opt.alpha) {
    if (!(*opt.alpha >= 0.0 && *opt.alpha <= 1.0))
      throw ConfigError("--alpha must be in [0,1]");
    cfg.transfer.alpha = *opt.alpha;
  }
  if (opt.model_kind) cfg.model_kind = riskpred::cli::model_kind_from_string(*opt.model_kind);
  if (opt.threads) {
    if (*opt.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg.threads = *opt.threads;
  }
  return cfg;
}

void print_summary(const RunReport& report) {
  std::printf("%s: wrote report.json and %zu artifact(s)\n", report.command.c_str(),
              report.artifacts.size());
  for (const auto& [name, values] : report.metrics) {
    std::string line = "  " + name + ":";
    for (const auto& [metric, value] : values) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %s=%.4f", metric.c_str(), value);
      line += buf;
    }
    std::printf("%s\n", line.c_str());
  }
  std::printf("wall clock: %.2f s\n", report.wall_clock_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"injury-risk prediction toolkit"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    RunReport (*run)(const ExperimentConfig&);
  };
  const Sub subs[] = {
      {"generate", "write a synthetic organization-pair dataset as CSVs",
       riskpred::cli::run_generate},
      {"train", "fit a model and persist it as model.json", riskpred::cli::run_train},
      {"evaluate", "score a saved model on a test set", riskpred::cli::run_evaluate},
      {"costcurve", "compare cost-curve envelopes across model kinds",
       riskpred::cli::run_costcurve},
      {"optimize-threshold", "sweep decision thresholds against a profit matrix",
       riskpred::cli::run_optimize_threshold},
      {"transfer", "run the six transfer-learning methods and tabulate metrics",
       riskpred::cli::run_transfer},
      {"sweep-alpha", "evaluate the weighting method across alpha in {0.0,...,1.0}",
       riskpred::cli::run_sweep_alpha},
      {"explain", "export binned log-odds impact, PDP and adjusted-effect artifacts",
       riskpred::cli::run_explain},
  };

  CommonOptions opts[std::size(subs)];
  for (std::size_t k = 0; k < std::size(subs); ++k) {
    CLI::App* cmd = app.add_subcommand(subs[k].name, subs[k].help);
    add_common(cmd, opts[k]);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t k = 0; k < std::size(subs); ++k) {
    if (!app.get_subcommand(subs[k].name)->parsed()) continue;
    try {
      const auto start = std::chrono::steady_clock::now();
      ExperimentConfig cfg = build_config(opts[k]);
      RunReport report = subs[k].run(cfg);
      report.wall_clock_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      print_summary(report);
      return 0;
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 2;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 2;
}
