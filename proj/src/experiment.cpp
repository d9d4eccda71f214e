#include "riskpred/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "riskpred/dag.hpp"
#include "riskpred/explain.hpp"
#include "riskpred/resample.hpp"
#include "riskpred/rng.hpp"
#include "riskpred/svg.hpp"

namespace riskpred::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    require(allowed.count(key) > 0, "unknown key '" + key + "' in " + where);
}

// Staged output directory: artifacts land in <output>.staging and are moved
// into place only when the run succeeds, so failures leave no partial output.
class Staging {
 public:
  explicit Staging(const std::string& output_dir)
      : final_(output_dir), staging_(output_dir + ".staging") {
    require(!output_dir.empty(), "output_dir must not be empty");
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~Staging() {
    if (!done_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  fs::path path(const std::string& name) const { return staging_ / name; }
  void finalize() {
    fs::remove_all(final_);
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    fs::rename(staging_, final_);
    done_ = true;
  }

 private:
  fs::path final_;
  fs::path staging_;
  bool done_ = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_xy_csv(const fs::path& path, const std::string& x_name,
                  const std::string& y_name,
                  const std::vector<std::pair<double, double>>& points) {
  std::string text = x_name + "," + y_name + "\n";
  for (const auto& [x, y] : points) text += fmt17(x) + "," + fmt17(y) + "\n";
  write_text(path, text);
}

void write_report(const RunReport& report, Staging& staging) {
  write_text(staging.path("report.json"), report.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Data loading

struct Triplet {
  Dataset source;
  Dataset target_train;
  Dataset target_test;
};

std::uint64_t dataset_seed(const ExperimentConfig& cfg) {
  return cfg.data.synthetic && cfg.data.synthetic->seed != 0
             ? cfg.data.synthetic->seed
             : derive_seed(cfg.seed, "dataset");
}

void require_file(const std::string& path) {
  require(fs::exists(path), "referenced file does not exist: '" + path + "'");
}

Triplet load_triplet(const ExperimentConfig& cfg) {
  if (cfg.data.synthetic) {
    SyntheticOrgConfig sc = *cfg.data.synthetic;
    sc.seed = dataset_seed(cfg);
    OrgPair pair = generate_org_pair(sc);
    return {std::move(pair.source), std::move(pair.target_train),
            std::move(pair.target_test)};
  }
  require(!cfg.data.source_csv.empty(),
          "this command needs a synthetic dataset or a source/target CSV triplet");
  require_file(cfg.data.source_csv);
  require_file(cfg.data.target_train_csv);
  require_file(cfg.data.target_test_csv);
  return {load_csv(cfg.data.source_csv), load_csv(cfg.data.target_train_csv),
          load_csv(cfg.data.target_test_csv)};
}

struct TrainTest {
  Dataset train;
  std::optional<Dataset> test;
};

TrainTest load_pair(const ExperimentConfig& cfg, bool need_test) {
  if (cfg.data.synthetic) {
    SyntheticOrgConfig sc = *cfg.data.synthetic;
    sc.seed = dataset_seed(cfg);
    OrgPair pair = generate_org_pair(sc);
    return {std::move(pair.target_train), std::move(pair.target_test)};
  }
  if (!cfg.data.train_csv.empty()) {
    require_file(cfg.data.train_csv);
    TrainTest out{load_csv(cfg.data.train_csv), std::nullopt};
    if (!cfg.data.test_csv.empty()) {
      require_file(cfg.data.test_csv);
      out.test = load_csv(cfg.data.test_csv);
    }
    require(!need_test || out.test.has_value(), "this command needs a test dataset");
    return out;
  }
  if (!cfg.data.source_csv.empty()) {
    require_file(cfg.data.target_train_csv);
    require_file(cfg.data.target_test_csv);
    return {load_csv(cfg.data.target_train_csv),
            load_csv(cfg.data.target_test_csv)};
  }
  throw ConfigError("no dataset configured");
}

// ---------------------------------------------------------------------------
// Model dispatch

struct FittedModel {
  ModelKind kind = ModelKind::kGbdt;
  std::optional<gbdt::GbdtModel> gbdt_model;
  std::optional<ensemble::BaggedEnsemble> bagged;
  std::optional<ensemble::BoostedEnsemble> boosted;

  std::vector<double> predict(const Dataset& d) const {
    if (gbdt_model) return gbdt_model->predict_proba(d);
    if (bagged) return bagged->predict_proba(d);
    return boosted->predict_proba(d);
  }
  json to_json() const {
    if (gbdt_model) return gbdt_model->to_json();
    if (bagged) return bagged->to_json();
    return boosted->to_json();
  }
};

gbdt::GbdtConfig resolved_gbdt(const ExperimentConfig& cfg) {
  gbdt::GbdtConfig g = cfg.gbdt;
  g.seed = derive_seed(cfg.seed, "gbdt");
  g.n_threads = cfg.threads;
  if (cfg.eval.profit_matrix) g.eval_metric.profit = *cfg.eval.profit_matrix;
  return g;
}

ensemble::EnsembleConfig resolved_ensemble(const ExperimentConfig& cfg) {
  ensemble::EnsembleConfig e = cfg.ensemble;
  e.seed = derive_seed(cfg.seed, "ensemble");
  e.n_threads = cfg.threads;
  return e;
}

FittedModel fit_model(ModelKind kind, const Dataset& train, const Dataset* valid,
                      const ExperimentConfig& cfg) {
  FittedModel out;
  out.kind = kind;
  switch (kind) {
    case ModelKind::kGbdt:
      out.gbdt_model = gbdt::fit(train, valid, resolved_gbdt(cfg));
      break;
    case ModelKind::kUnderBagging:
      out.bagged = ensemble::fit_underbagging(train, resolved_ensemble(cfg));
      break;
    case ModelKind::kSmoteBagging:
      out.bagged = ensemble::fit_smotebagging(train, resolved_ensemble(cfg));
      break;
    case ModelKind::kRusBoost:
      out.boosted = ensemble::fit_rusboost(train, resolved_ensemble(cfg));
      break;
    case ModelKind::kSmoteBoost:
      out.boosted = ensemble::fit_smoteboost(train, resolved_ensemble(cfg));
      break;
  }
  return out;
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  json j;
  in >> j;
  const auto kind = j.at("kind").get<std::string>();
  FittedModel out;
  if (kind == "gbdt") {
    out.kind = ModelKind::kGbdt;
    out.gbdt_model = gbdt::GbdtModel::from_json(j);
  } else if (kind == "underbagging" || kind == "smotebagging") {
    out.kind = kind == "underbagging" ? ModelKind::kUnderBagging : ModelKind::kSmoteBagging;
    out.bagged = ensemble::BaggedEnsemble::from_json(j);
  } else if (kind == "rusboost" || kind == "smoteboost") {
    out.kind = kind == "rusboost" ? ModelKind::kRusBoost : ModelKind::kSmoteBoost;
    out.boosted = ensemble::BoostedEnsemble::from_json(j);
  } else {
    throw std::runtime_error("unknown model kind '" + kind + "' in '" + path + "'");
  }
  return out;
}

std::map<std::string, double> standard_metrics(std::span<const double> scores,
                                               const Dataset& d) {
  const auto c = eval::confusion_at_threshold(scores, d.labels(), d.weights(), 0.5);
  return {{"precision", eval::precision(c)},
          {"recall", eval::recall(c)},
          {"macro_f1", eval::macro_f1(c)},
          {"aucpr", eval::pr_curve_and_aucpr(scores, d.labels(), d.weights()).aucpr}};
}

std::vector<double> pdp_grid_for(const Dataset& d, const BinningScheme& bins,
                                 std::size_t feature, int fallback_points) {
  const auto& edges = bins.edges(feature);
  if (edges.size() >= 2) return edges;
  double lo = d.feature(0, feature), hi = lo;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    lo = std::min(lo, d.feature(i, feature));
    hi = std::max(hi, d.feature(i, feature));
  }
  if (hi == lo) return {lo};
  std::vector<double> grid(fallback_points);
  for (int k = 0; k < fallback_points; ++k)
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / (fallback_points - 1);
  return grid;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kGbdt: return "GBDT";
    case ModelKind::kUnderBagging: return "UNDERBAG";
    case ModelKind::kSmoteBagging: return "SMOTEBAG";
    case ModelKind::kRusBoost: return "RUSBOOST";
    case ModelKind::kSmoteBoost: return "SMOTEBOOST";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "GBDT") return ModelKind::kGbdt;
  if (s == "UNDERBAG") return ModelKind::kUnderBagging;
  if (s == "SMOTEBAG") return ModelKind::kSmoteBagging;
  if (s == "RUSBOOST") return ModelKind::kRusBoost;
  if (s == "SMOTEBOOST") return ModelKind::kSmoteBoost;
  throw ConfigError("unknown model kind '" + s + "'");
}

namespace {

SyntheticOrgConfig parse_synthetic(const json& j) {
  check_keys(j,
             {"n_target_train", "n_source", "n_target_test", "n_features",
              "injury_rate_target", "injury_rate_source", "shift_magnitude",
              "noise_flip_rate", "seed"},
             "dataset.synthetic");
  SyntheticOrgConfig c;
  if (j.contains("n_target_train")) c.n_target_train = j["n_target_train"].get<std::size_t>();
  if (j.contains("n_source")) c.n_source = j["n_source"].get<std::size_t>();
  if (j.contains("n_target_test")) c.n_target_test = j["n_target_test"].get<std::size_t>();
  if (j.contains("n_features")) c.n_features = j["n_features"].get<std::size_t>();
  if (j.contains("injury_rate_target"))
    c.injury_rate_target = j["injury_rate_target"].get<double>();
  if (j.contains("injury_rate_source"))
    c.injury_rate_source = j["injury_rate_source"].get<double>();
  if (j.contains("shift_magnitude")) c.shift_magnitude = j["shift_magnitude"].get<double>();
  if (j.contains("noise_flip_rate")) c.noise_flip_rate = j["noise_flip_rate"].get<double>();
  c.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : 0;
  return c;
}

gbdt::GbdtConfig parse_gbdt(const json& j) {
  check_keys(j,
             {"n_rounds", "max_depth", "learning_rate", "l2_leaf_reg",
              "min_child_hessian", "early_stopping_rounds", "eval_metric",
              "metric_threshold"},
             "model.gbdt");
  gbdt::GbdtConfig c;
  if (j.contains("n_rounds")) c.n_rounds = j["n_rounds"].get<int>();
  if (j.contains("max_depth")) c.max_depth = j["max_depth"].get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("l2_leaf_reg")) c.l2_leaf_reg = j["l2_leaf_reg"].get<double>();
  if (j.contains("min_child_hessian"))
    c.min_child_hessian = j["min_child_hessian"].get<double>();
  if (j.contains("early_stopping_rounds"))
    c.early_stopping_rounds = j["early_stopping_rounds"].get<int>();
  if (j.contains("eval_metric")) {
    const auto m = j["eval_metric"].get<std::string>();
    if (m == "LOGLOSS") {
      c.eval_metric.kind = gbdt::MetricKind::kLogLoss;
    } else if (m == "AUCPR") {
      c.eval_metric.kind = gbdt::MetricKind::kAucpr;
    } else if (m == "MACRO_F1") {
      c.eval_metric.kind = gbdt::MetricKind::kMacroF1;
    } else if (m == "PROFIT") {
      c.eval_metric.kind = gbdt::MetricKind::kProfit;
    } else {
      throw ConfigError("unknown eval_metric '" + m + "'");
    }
  }
  if (j.contains("metric_threshold"))
    c.eval_metric.threshold = j["metric_threshold"].get<double>();
  return c;
}

ensemble::EnsembleConfig parse_ensemble(const json& j) {
  check_keys(j, {"n_members", "weak_max_depth", "target_ratio", "smote_k"},
             "model.ensemble");
  ensemble::EnsembleConfig c;
  if (j.contains("n_members")) c.n_members = j["n_members"].get<int>();
  if (j.contains("weak_max_depth")) c.weak_max_depth = j["weak_max_depth"].get<int>();
  if (j.contains("target_ratio")) c.target_ratio = j["target_ratio"].get<double>();
  if (j.contains("smote_k")) c.smote_k = j["smote_k"].get<int>();
  return c;
}

transfer::TransferConfig parse_transfer(const json& j) {
  check_keys(j, {"alpha", "method", "clip_lo", "clip_hi", "lr_lambda"}, "transfer");
  transfer::TransferConfig c;
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("method"))
    c.method = transfer::transfer_method_from_string(j["method"].get<std::string>());
  if (j.contains("clip_lo")) c.clip_lo = j["clip_lo"].get<double>();
  if (j.contains("clip_hi")) c.clip_hi = j["clip_hi"].get<double>();
  if (j.contains("lr_lambda")) c.lr_lambda = j["lr_lambda"].get<double>();
  return c;
}

eval::ProfitMatrix parse_profit_matrix(const json& j) {
  check_keys(j, {"v_tp", "v_fp", "v_tn", "v_fn"}, "eval.profit_matrix");
  eval::ProfitMatrix pm;
  if (j.contains("v_tp")) pm.v_tp = j["v_tp"].get<double>();
  if (j.contains("v_fp")) pm.v_fp = j["v_fp"].get<double>();
  if (j.contains("v_tn")) pm.v_tn = j["v_tn"].get<double>();
  if (j.contains("v_fn")) pm.v_fn = j["v_fn"].get<double>();
  return pm;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  try {
    check_keys(j,
               {"seed", "threads", "output_dir", "dataset", "model", "transfer",
                "eval", "explain", "model_file"},
               "config");
    ExperimentConfig cfg;
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    require(cfg.threads >= 1, "threads must be >= 1");
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("model_file")) cfg.model_file = j["model_file"].get<std::string>();

    if (j.contains("dataset")) {
      const json& dj = j["dataset"];
      check_keys(dj,
                 {"synthetic", "source_csv", "target_train_csv", "target_test_csv",
                  "train_csv", "test_csv"},
                 "dataset");
      if (dj.contains("synthetic")) cfg.data.synthetic = parse_synthetic(dj["synthetic"]);
      if (dj.contains("source_csv")) cfg.data.source_csv = dj["source_csv"].get<std::string>();
      if (dj.contains("target_train_csv"))
        cfg.data.target_train_csv = dj["target_train_csv"].get<std::string>();
      if (dj.contains("target_test_csv"))
        cfg.data.target_test_csv = dj["target_test_csv"].get<std::string>();
      if (dj.contains("train_csv")) cfg.data.train_csv = dj["train_csv"].get<std::string>();
      if (dj.contains("test_csv")) cfg.data.test_csv = dj["test_csv"].get<std::string>();

      const bool has_synth = cfg.data.synthetic.has_value();
      const bool has_triplet = !cfg.data.source_csv.empty() ||
                               !cfg.data.target_train_csv.empty() ||
                               !cfg.data.target_test_csv.empty();
      const bool has_pair = !cfg.data.train_csv.empty() || !cfg.data.test_csv.empty();
      require(has_synth + has_triplet + has_pair <= 1,
              "dataset must have exactly one source (synthetic, triplet or pair)");
      if (has_triplet)
        require(!cfg.data.source_csv.empty() && !cfg.data.target_train_csv.empty() &&
                    !cfg.data.target_test_csv.empty(),
                "CSV triplet needs source_csv, target_train_csv and target_test_csv");
      if (has_pair) require(!cfg.data.train_csv.empty(), "CSV pair needs train_csv");
    } else {
      cfg.data.synthetic = SyntheticOrgConfig{};
      cfg.data.synthetic->seed = 0;  // derived from the global seed at run time
    }

    if (j.contains("model")) {
      const json& mj = j["model"];
      check_keys(mj, {"kind", "kinds", "gbdt", "ensemble"}, "model");
      if (mj.contains("kind"))
        cfg.model_kind = model_kind_from_string(mj["kind"].get<std::string>());
      if (mj.contains("kinds"))
        for (const auto& k : mj["kinds"])
          cfg.model_kinds.push_back(model_kind_from_string(k.get<std::string>()));
      if (mj.contains("gbdt")) cfg.gbdt = parse_gbdt(mj["gbdt"]);
      if (mj.contains("ensemble")) cfg.ensemble = parse_ensemble(mj["ensemble"]);
    }
    if (j.contains("transfer")) cfg.transfer = parse_transfer(j["transfer"]);
    if (j.contains("eval")) {
      const json& ej = j["eval"];
      check_keys(ej, {"profit_matrix", "n_thresholds", "cost_curve_grid"}, "eval");
      if (ej.contains("profit_matrix"))
        cfg.eval.profit_matrix = parse_profit_matrix(ej["profit_matrix"]);
      if (ej.contains("n_thresholds")) cfg.eval.n_thresholds = ej["n_thresholds"].get<int>();
      if (ej.contains("cost_curve_grid"))
        cfg.eval.cost_curve_grid = ej["cost_curve_grid"].get<int>();
    }
    if (j.contains("explain")) {
      const json& xj = j["explain"];
      check_keys(xj,
                 {"features", "n_bins", "grid_points", "loess_span", "dag_file",
                  "adjustment_set"},
                 "explain");
      if (xj.contains("features"))
        cfg.explain.features = xj["features"].get<std::vector<std::string>>();
      if (xj.contains("n_bins")) cfg.explain.n_bins = xj["n_bins"].get<int>();
      if (xj.contains("grid_points")) cfg.explain.grid_points = xj["grid_points"].get<int>();
      if (xj.contains("loess_span")) cfg.explain.loess_span = xj["loess_span"].get<double>();
      if (xj.contains("dag_file")) cfg.explain.dag_file = xj["dag_file"].get<std::string>();
      if (xj.contains("adjustment_set"))
        cfg.explain.adjustment_set = xj["adjustment_set"].get<std::vector<std::string>>();
    }

    // Range checks that do not need data.
    try {
      cfg.gbdt.validate();
      cfg.ensemble.validate();
      cfg.transfer.validate();
      if (cfg.data.synthetic) {
        SyntheticOrgConfig probe = *cfg.data.synthetic;
        probe.seed = 1;
        probe.validate();
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    require(cfg.eval.n_thresholds >= 2, "eval.n_thresholds must be >= 2");
    require(cfg.eval.cost_curve_grid >= 2, "eval.cost_curve_grid must be >= 2");
    require(cfg.explain.n_bins >= 2, "explain.n_bins must be >= 2");
    require(cfg.explain.grid_points >= 2, "explain.grid_points must be >= 2");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json ExperimentConfig::echo() const {
  json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  if (data.synthetic) {
    const auto& s = *data.synthetic;
    j["dataset"]["synthetic"] = {{"n_target_train", s.n_target_train},
                                 {"n_source", s.n_source},
                                 {"n_target_test", s.n_target_test},
                                 {"n_features", s.n_features},
                                 {"injury_rate_target", s.injury_rate_target},
                                 {"injury_rate_source", s.injury_rate_source},
                                 {"shift_magnitude", s.shift_magnitude},
                                 {"noise_flip_rate", s.noise_flip_rate},
                                 {"seed", s.seed}};
  } else if (!data.source_csv.empty()) {
    j["dataset"] = {{"source_csv", data.source_csv},
                    {"target_train_csv", data.target_train_csv},
                    {"target_test_csv", data.target_test_csv}};
  } else {
    j["dataset"] = {{"train_csv", data.train_csv}, {"test_csv", data.test_csv}};
  }
  j["model"]["kind"] = to_string(model_kind);
  if (!model_kinds.empty()) {
    json kinds = json::array();
    for (ModelKind k : model_kinds) kinds.push_back(to_string(k));
    j["model"]["kinds"] = std::move(kinds);
  }
  j["model"]["gbdt"] = {{"n_rounds", gbdt.n_rounds},
                        {"max_depth", gbdt.max_depth},
                        {"learning_rate", gbdt.learning_rate},
                        {"l2_leaf_reg", gbdt.l2_leaf_reg},
                        {"min_child_hessian", gbdt.min_child_hessian}};
  if (gbdt.early_stopping_rounds)
    j["model"]["gbdt"]["early_stopping_rounds"] = *gbdt.early_stopping_rounds;
  j["model"]["ensemble"] = {{"n_members", ensemble.n_members},
                            {"weak_max_depth", ensemble.weak_max_depth},
                            {"target_ratio", ensemble.target_ratio},
                            {"smote_k", ensemble.smote_k}};
  j["transfer"] = {{"alpha", transfer.alpha},
                   {"method", transfer::to_string(transfer.method)},
                   {"clip_lo", transfer.clip_lo},
                   {"clip_hi", transfer.clip_hi},
                   {"lr_lambda", transfer.lr_lambda}};
  if (eval.profit_matrix) {
    j["eval"]["profit_matrix"] = {{"v_tp", eval.profit_matrix->v_tp},
                                  {"v_fp", eval.profit_matrix->v_fp},
                                  {"v_tn", eval.profit_matrix->v_tn},
                                  {"v_fn", eval.profit_matrix->v_fn}};
  }
  j["eval"]["n_thresholds"] = eval.n_thresholds;
  j["eval"]["cost_curve_grid"] = eval.cost_curve_grid;
  if (!model_file.empty()) j["model_file"] = model_file;
  return j;
}

json RunReport::to_json() const {
  json j;
  j["format_version"] = 1;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["config"] = config_echo;
  json m = json::object();
  for (const auto& [name, values] : metrics) {
    json row = json::object();
    for (const auto& [k, v] : values) row[k] = v;
    m[name] = std::move(row);
  }
  j["metrics"] = std::move(m);
  j["artifacts"] = artifacts;
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

RunReport make_report(const char* command, const ExperimentConfig& cfg) {
  RunReport r;
  r.command = command;
  r.tool_version = kToolVersion;
  r.config_echo = cfg.echo();
  return r;
}

}  // namespace

RunReport run_generate(const ExperimentConfig& cfg) {
  require(cfg.data.synthetic.has_value(), "generate needs dataset.synthetic");
  SyntheticOrgConfig sc = *cfg.data.synthetic;
  sc.seed = dataset_seed(cfg);

  Staging staging(cfg.output_dir);
  const OrgPair pair = generate_org_pair(sc);
  write_csv(pair.source, staging.path("source.csv").string());
  write_csv(pair.target_train, staging.path("target_train.csv").string());
  write_csv(pair.target_test, staging.path("target_test.csv").string());

  RunReport report = make_report("generate", cfg);
  report.artifacts = {"source.csv", "target_train.csv", "target_test.csv"};
  report.extra = {{"rows_source", pair.source.n_samples()},
                  {"rows_target_train", pair.target_train.n_samples()},
                  {"rows_target_test", pair.target_test.n_samples()},
                  {"n_features", pair.source.n_features()}};
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_train(const ExperimentConfig& cfg) {
  const TrainTest data = load_pair(cfg, false);
  const Dataset* valid = data.test ? &*data.test : nullptr;

  Staging staging(cfg.output_dir);
  const FittedModel model = fit_model(cfg.model_kind, data.train, valid, cfg);
  write_text(staging.path("model.json"), model.to_json().dump(2) + "\n");

  RunReport report = make_report("train", cfg);
  report.artifacts = {"model.json"};
  if (data.test) {
    const auto scores = model.predict(*data.test);
    report.metrics[to_string(cfg.model_kind)] = standard_metrics(scores, *data.test);
    const auto pr = eval::pr_curve_and_aucpr(scores, data.test->labels(),
                                             data.test->weights());
    std::vector<std::pair<double, double>> points;
    for (const auto& p : pr.points) points.emplace_back(p.recall, p.precision);
    write_xy_csv(staging.path("pr_curve.csv"), "recall", "precision", points);
    report.artifacts.push_back("pr_curve.csv");
  }
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_evaluate(const ExperimentConfig& cfg) {
  require(!cfg.model_file.empty(), "evaluate needs model_file");
  require_file(cfg.model_file);
  const TrainTest data = load_pair(cfg, true);
  const Dataset& test = data.test ? *data.test : data.train;

  Staging staging(cfg.output_dir);
  const FittedModel model = load_model(cfg.model_file);
  const auto scores = model.predict(test);

  RunReport report = make_report("evaluate", cfg);
  report.metrics[to_string(model.kind)] = standard_metrics(scores, test);

  const auto pr = eval::pr_curve_and_aucpr(scores, test.labels(), test.weights());
  std::vector<std::pair<double, double>> pr_points;
  for (const auto& p : pr.points) pr_points.emplace_back(p.recall, p.precision);
  write_xy_csv(staging.path("pr_curve.csv"), "recall", "precision", pr_points);

  const auto roc = eval::roc_points(scores, test.labels(), test.weights());
  std::vector<std::pair<double, double>> roc_xy;
  for (const auto& p : roc) roc_xy.emplace_back(p.fpr, p.tpr);
  write_xy_csv(staging.path("roc_curve.csv"), "fpr", "tpr", roc_xy);

  const auto cc = eval::cost_curve(roc, cfg.eval.cost_curve_grid);
  std::vector<std::pair<double, double>> cc_xy;
  for (std::size_t k = 0; k < cc.grid.size(); ++k)
    cc_xy.emplace_back(cc.grid[k], cc.envelope[k]);
  write_xy_csv(staging.path("costcurve.csv"), "pc", "normalized_expected_cost", cc_xy);

  report.artifacts = {"pr_curve.csv", "roc_curve.csv", "costcurve.csv"};
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_costcurve(const ExperimentConfig& cfg) {
  const TrainTest data = load_pair(cfg, true);
  const Dataset& test = *data.test;
  std::vector<ModelKind> kinds = cfg.model_kinds;
  if (kinds.empty())
    kinds = {ModelKind::kGbdt, ModelKind::kUnderBagging, ModelKind::kRusBoost};

  Staging staging(cfg.output_dir);
  RunReport report = make_report("costcurve", cfg);

  std::vector<svg::Series> series;
  for (ModelKind kind : kinds) {
    const FittedModel model = fit_model(kind, data.train, nullptr, cfg);
    const auto scores = model.predict(test);
    report.metrics[to_string(kind)] = standard_metrics(scores, test);
    const auto roc = eval::roc_points(scores, test.labels(), test.weights());
    const auto cc = eval::cost_curve(roc, cfg.eval.cost_curve_grid);

    svg::Series s;
    s.label = to_string(kind);
    std::vector<std::pair<double, double>> xy;
    for (std::size_t k = 0; k < cc.grid.size(); ++k) {
      xy.emplace_back(cc.grid[k], cc.envelope[k]);
      s.points.emplace_back(cc.grid[k], cc.envelope[k]);
    }
    const std::string name = "costcurve_" + to_string(kind) + ".csv";
    write_xy_csv(staging.path(name), "pc", "normalized_expected_cost", xy);
    report.artifacts.push_back(name);
    series.push_back(std::move(s));
  }

  // Trivial classifiers are overlaid, never folded into the envelopes.
  svg::Series trivial;
  trivial.label = "trivial";
  std::vector<std::pair<double, double>> trivial_xy;
  for (int k = 0; k < cfg.eval.cost_curve_grid; ++k) {
    const double pc = static_cast<double>(k) / (cfg.eval.cost_curve_grid - 1);
    const double ne = std::min(eval::trivial_always_negative().at(pc),
                               eval::trivial_always_positive().at(pc));
    trivial.points.emplace_back(pc, ne);
    trivial_xy.emplace_back(pc, ne);
  }
  write_xy_csv(staging.path("costcurve_trivial.csv"), "pc", "normalized_expected_cost",
               trivial_xy);
  report.artifacts.push_back("costcurve_trivial.csv");
  series.push_back(std::move(trivial));

  write_text(staging.path("costcurves.svg"),
             svg::line_plot("Cost curves (lower envelopes)", "probability cost PC(+)",
                            "normalized expected cost", series));
  report.artifacts.push_back("costcurves.svg");
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_optimize_threshold(const ExperimentConfig& cfg) {
  require(cfg.eval.profit_matrix.has_value(),
          "optimize-threshold needs eval.profit_matrix");
  const TrainTest data = load_pair(cfg, true);
  const Dataset& test = *data.test;

  Staging staging(cfg.output_dir);
  FittedModel model;
  if (!cfg.model_file.empty()) {
    require_file(cfg.model_file);
    model = load_model(cfg.model_file);
  } else {
    model = fit_model(cfg.model_kind, data.train, nullptr, cfg);
  }
  const auto scores = model.predict(test);
  const auto result =
      eval::optimize_profit_threshold(scores, test.labels(), test.weights(),
                                      *cfg.eval.profit_matrix, cfg.eval.n_thresholds);

  RunReport report = make_report("optimize-threshold", cfg);
  report.metrics[to_string(model.kind)] = standard_metrics(scores, test);
  write_xy_csv(staging.path("profit_curve.csv"), "threshold", "profit", result.curve);

  svg::Series s;
  s.label = "profit";
  s.points = result.curve;
  write_text(staging.path("profit_curve.svg"),
             svg::line_plot("Profit by decision threshold", "threshold", "profit", {s}));

  report.artifacts = {"profit_curve.csv", "profit_curve.svg"};
  report.extra = {{"best_threshold", result.best_threshold},
                  {"best_profit", result.best_profit},
                  {"benchmark_profit", result.benchmark_profit},
                  {"ratio_defined", result.ratio_defined}};
  if (result.ratio_defined) report.extra["profit_ratio"] = result.profit_ratio;
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_transfer(const ExperimentConfig& cfg) {
  const Triplet data = load_triplet(cfg);
  const gbdt::GbdtConfig base = resolved_gbdt(cfg);

  Staging staging(cfg.output_dir);
  RunReport report = make_report("transfer", cfg);

  const transfer::TransferMethod methods[] = {
      transfer::TransferMethod::kT,        transfer::TransferMethod::kS,
      transfer::TransferMethod::kSUnionT,  transfer::TransferMethod::kOnes,
      transfer::TransferMethod::kGaussian, transfer::TransferMethod::kHybrid};

  std::string table = "method,precision,recall,macro_f1,aucpr\n";
  for (const auto method : methods) {
    transfer::TransferConfig tc = cfg.transfer;
    tc.method = method;
    std::optional<transfer::SourceWeights> weights;
    if (method == transfer::TransferMethod::kOnes ||
        method == transfer::TransferMethod::kGaussian ||
        method == transfer::TransferMethod::kHybrid)
      weights = transfer::compute_source_weights(data.source, data.target_train, tc, base);
    const gbdt::GbdtModel model = transfer::fit_transfer_model(
        data.source, data.target_train, tc, base, weights ? &*weights : nullptr);
    const auto scores = model.predict_proba(data.target_test);
    const auto metrics = standard_metrics(scores, data.target_test);
    report.metrics[transfer::to_string(method)] = metrics;
    table += transfer::to_string(method) + "," + fmt17(metrics.at("precision")) + "," +
             fmt17(metrics.at("recall")) + "," + fmt17(metrics.at("macro_f1")) + "," +
             fmt17(metrics.at("aucpr")) + "\n";

    if (method == transfer::TransferMethod::kHybrid) {
      transfer::write_weights_csv(*weights, staging.path("weights_hybrid.csv").string());
      report.artifacts.push_back("weights_hybrid.csv");
      json notes = json::array();
      for (const auto& n : weights->notes) notes.push_back(n);
      report.extra["hybrid_weight_notes"] = std::move(notes);
    }
  }
  write_text(staging.path("transfer_table.csv"), table);
  report.artifacts.push_back("transfer_table.csv");
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_sweep_alpha(const ExperimentConfig& cfg) {
  require(cfg.transfer.method == transfer::TransferMethod::kOnes ||
              cfg.transfer.method == transfer::TransferMethod::kGaussian ||
              cfg.transfer.method == transfer::TransferMethod::kHybrid,
          "sweep-alpha needs a weighting transfer method (ONES, GAUSSIAN or HYBRID)");
  const Triplet data = load_triplet(cfg);
  const gbdt::GbdtConfig base = resolved_gbdt(cfg);

  Staging staging(cfg.output_dir);
  RunReport report = make_report("sweep-alpha", cfg);

  // Source weights do not depend on alpha; compute them once.
  const transfer::SourceWeights weights =
      transfer::compute_source_weights(data.source, data.target_train, cfg.transfer, base);

  std::vector<std::pair<double, double>> curve;
  double best_alpha = 0.0, best_aucpr = -1.0;
  for (int k = 0; k <= 10; ++k) {
    const double alpha = static_cast<double>(k) / 10.0;
    transfer::TransferConfig tc = cfg.transfer;
    tc.alpha = alpha;
    const gbdt::GbdtModel model =
        transfer::fit_transfer_model(data.source, data.target_train, tc, base, &weights);
    const auto scores = model.predict_proba(data.target_test);
    const auto metrics = standard_metrics(scores, data.target_test);
    char key[32];
    std::snprintf(key, sizeof key, "alpha=%.1f", alpha);
    report.metrics[key] = metrics;
    curve.emplace_back(alpha, metrics.at("aucpr"));
    if (metrics.at("aucpr") > best_aucpr) {
      best_aucpr = metrics.at("aucpr");
      best_alpha = alpha;
    }
  }

  write_xy_csv(staging.path("alpha_sweep.csv"), "alpha", "aucpr", curve);
  svg::Series s;
  s.label = "AUCPR";
  s.points = curve;
  write_text(staging.path("alpha_sweep.svg"),
             svg::line_plot("AUCPR by alpha (" +
                                transfer::to_string(cfg.transfer.method) + ")",
                            "alpha", "AUCPR", {s}));
  report.artifacts = {"alpha_sweep.csv", "alpha_sweep.svg"};
  report.extra = {{"best_alpha", best_alpha}, {"best_aucpr", best_aucpr}};
  write_report(report, staging);
  staging.finalize();
  return report;
}

RunReport run_explain(const ExperimentConfig& cfg) {
  const TrainTest data = load_pair(cfg, false);
  const Dataset& train = data.train;

  Staging staging(cfg.output_dir);
  RunReport report = make_report("explain", cfg);

  gbdt::GbdtModel model = [&] {
    if (!cfg.model_file.empty()) {
      require_file(cfg.model_file);
      FittedModel loaded = load_model(cfg.model_file);
      require(loaded.gbdt_model.has_value(), "explain needs a gbdt model");
      return std::move(*loaded.gbdt_model);
    }
    return gbdt::fit(train, nullptr, resolved_gbdt(cfg));
  }();

  const BinningScheme bins = fit_quantile_bins(train, cfg.explain.n_bins);
  const explain::BinnedImpact impact = explain::binned_impact(model, train, bins);

  std::string impact_csv = "feature,bin_index,bin_label,mean_contribution,count\n";
  for (std::size_t f = 0; f < impact.per_feature.size(); ++f)
    for (std::size_t b = 0; b < impact.per_feature[f].size(); ++b) {
      const auto& stat = impact.per_feature[f][b];
      impact_csv += impact.feature_names[f] + "," + std::to_string(b) + ",\"" +
                    stat.label + "\"," + fmt17(stat.mean_contribution) + "," +
                    std::to_string(stat.count) + "\n";
    }
  write_text(staging.path("impact.csv"), impact_csv);
  report.artifacts.push_back("impact.csv");

  std::vector<std::string> selected = cfg.explain.features;
  if (selected.empty()) {
    for (std::size_t f = 0; f < std::min<std::size_t>(3, train.n_features()); ++f)
      selected.push_back(train.feature_names()[f]);
  }
  auto feature_index = [&](const std::string& name) {
    const auto& names = train.feature_names();
    const auto it = std::find(names.begin(), names.end(), name);
    require(it != names.end(), "unknown feature '" + name + "' in explain.features");
    return static_cast<std::size_t>(it - names.begin());
  };

  std::vector<std::pair<std::string, double>> bars;
  for (const auto& name : selected) {
    const std::size_t f = feature_index(name);
    for (const auto& stat : impact.per_feature[f])
      if (stat.count > 0)
        bars.emplace_back(name + " " + stat.label, stat.mean_contribution);
  }
  write_text(staging.path("impact.svg"),
             svg::bar_chart("Mean log-odds contribution by feature bin", bars));
  report.artifacts.push_back("impact.svg");

  std::vector<svg::Series> pdp_series;
  for (const auto& name : selected) {
    const std::size_t f = feature_index(name);
    const auto grid = pdp_grid_for(train, bins, f, cfg.explain.grid_points);
    const explain::PdpCurve curve = explain::pdp(model, train, f, grid);
    std::vector<std::pair<double, double>> xy;
    svg::Series s;
    s.label = name;
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
      xy.emplace_back(curve.grid[k], curve.avg_probability[k]);
      s.points.emplace_back(curve.grid[k], curve.avg_probability[k]);
    }
    const std::string file = "pdp_" + name + ".csv";
    write_xy_csv(staging.path(file), name, "avg_probability", xy);
    report.artifacts.push_back(file);
    pdp_series.push_back(std::move(s));
  }
  write_text(staging.path("pdp.svg"),
             svg::line_plot("Partial dependence", "feature value", "avg probability",
                            pdp_series));
  report.artifacts.push_back("pdp.svg");

  if (!cfg.explain.dag_file.empty()) {
    require_file(cfg.explain.dag_file);
    const causal::Dag dag = causal::Dag::load(cfg.explain.dag_file);
    const std::size_t f = feature_index(dag.treatment());
    const auto grid = pdp_grid_for(train, bins, f, cfg.explain.grid_points);
    const explain::PdpCurve adjusted = explain::adjusted_effect_curve(
        model, train, f, grid, dag, cfg.explain.adjustment_set);

    // Figure-style overlay: raw prediction by feature value, its loess
    // smooth, and the adjusted curve.
    const auto probs = model.predict_proba(train);
    std::vector<double> xs(train.n_samples());
    for (std::size_t i = 0; i < train.n_samples(); ++i) xs[i] = train.feature(i, f);
    const auto smooth = explain::loess_smooth(xs, probs, cfg.explain.loess_span);

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (xs[a] != xs[b]) return xs[a] < xs[b];
      return a < b;
    });
    svg::Series direct{"direct prediction", {}};
    svg::Series loess{"loess", {}};
    for (std::size_t i : order) {
      direct.points.emplace_back(xs[i], probs[i]);
      loess.points.emplace_back(xs[i], smooth[i]);
    }
    svg::Series adj{"adjusted PDP", {}};
    std::vector<std::pair<double, double>> adj_xy;
    for (std::size_t k = 0; k < adjusted.grid.size(); ++k) {
      adj.points.emplace_back(adjusted.grid[k], adjusted.avg_probability[k]);
      adj_xy.emplace_back(adjusted.grid[k], adjusted.avg_probability[k]);
    }
    write_xy_csv(staging.path("adjusted_effect.csv"), dag.treatment(),
                 "avg_probability", adj_xy);
    write_text(staging.path("effect.svg"),
               svg::line_plot("Effect of " + dag.treatment() + " on " + dag.outcome(),
                              dag.treatment(), "probability", {direct, loess, adj}));
    report.artifacts.push_back("adjusted_effect.csv");
    report.artifacts.push_back("effect.svg");
    json adjustment = json::array();
    for (const auto& z : cfg.explain.adjustment_set) adjustment.push_back(z);
    report.extra["adjustment_set"] = std::move(adjustment);
    report.extra["treatment"] = dag.treatment();
    report.extra["outcome"] = dag.outcome();
  }

  write_report(report, staging);
  staging.finalize();
  return report;
}

}  // namespace riskpred::cli
