#ifndef RISKPRED_EXPERIMENT_HPP
#define RISKPRED_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskpred/dataset.hpp"
#include "riskpred/ensemble.hpp"
#include "riskpred/eval.hpp"
#include "riskpred/gbdt.hpp"
#include "riskpred/synthetic.hpp"
#include "riskpred/transfer.hpp"

namespace riskpred::cli {

// Invalid configuration (exit code 2); any other failure exits 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { kGbdt, kUnderBagging, kSmoteBagging, kRusBoost, kSmoteBoost };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Exactly one dataset source: a synthetic generator config, a source /
// target-train / target-test CSV triplet, or a train / test CSV pair.
struct DatasetSpec {
  std::optional<SyntheticOrgConfig> synthetic;
  std::string source_csv, target_train_csv, target_test_csv;
  std::string train_csv, test_csv;
};

struct EvalSpec {
  std::optional<eval::ProfitMatrix> profit_matrix;
  int n_thresholds = 100;
  int cost_curve_grid = 101;
};

struct ExplainSpec {
  std::vector<std::string> features;  // empty: first three features
  int n_bins = 10;
  int grid_points = 20;
  double loess_span = 0.5;
  std::string dag_file;
  std::vector<std::string> adjustment_set;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string output_dir = "out";
  DatasetSpec data;
  ModelKind model_kind = ModelKind::kGbdt;
  std::vector<ModelKind> model_kinds;  // costcurve overlays
  gbdt::GbdtConfig gbdt;
  ensemble::EnsembleConfig ensemble;
  transfer::TransferConfig transfer;
  EvalSpec eval;
  ExplainSpec explain;
  std::string model_file;  // evaluate / optimize-threshold reuse

  // The JSON document echoed into reports: everything that identifies the
  // experiment, excluding execution details (thread count).
  nlohmann::json echo() const;
};

// Parses a config document; unknown keys are rejected. Flags handled by the
// CLI override fields after parsing.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct RunReport {
  std::string command;
  std::string tool_version;
  nlohmann::json config_echo;
  // method/model name -> metric name -> value, emitted in sorted key order
  std::map<std::string, std::map<std::string, double>> metrics;
  std::vector<std::string> artifacts;  // file names inside output_dir
  nlohmann::json extra;                // command-specific payload
  double wall_clock_seconds = 0.0;     // console only, never serialized

  nlohmann::json to_json() const;
};

RunReport run_generate(const ExperimentConfig& cfg);
RunReport run_train(const ExperimentConfig& cfg);
RunReport run_evaluate(const ExperimentConfig& cfg);
RunReport run_costcurve(const ExperimentConfig& cfg);
RunReport run_optimize_threshold(const ExperimentConfig& cfg);
RunReport run_transfer(const ExperimentConfig& cfg);
RunReport run_sweep_alpha(const ExperimentConfig& cfg);
RunReport run_explain(const ExperimentConfig& cfg);

}  // namespace riskpred::cli

#endif  // RISKPRED_EXPERIMENT_HPP
