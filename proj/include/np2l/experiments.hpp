#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "np2l/dataset.hpp"
#include "np2l/encoders.hpp"
#include "np2l/metrics.hpp"
#include "np2l/np2e.hpp"
#include "np2l/signed_gnn.hpp"
#include "np2l/splits.hpp"

namespace np2l {

enum class Task { LinkPrediction, NodeClassification };
enum class ModelKind { GCN, SGCN, GNCN, SGNCN };

Task task_from_string(const std::string& s);          // "link" | "node"
ModelKind model_from_string(const std::string& s);    // "gcn" | "sgcn" | "gncn" | "sgncn"
Head head_from_string(const std::string& s);          // "gae" | "vgae" | "none"
GateMode gate_from_string(const std::string& s);      // "learned" | "closed" | "open"
std::string to_string(Task t);
std::string to_string(ModelKind m);
std::string to_string(Head h);
std::string to_string(GateMode g);

inline bool is_signed(ModelKind m) { return m == ModelKind::SGCN || m == ModelKind::SGNCN; }

struct ExperimentConfig {
  std::string dataset;
  Task task = Task::LinkPrediction;
  ModelKind model = ModelKind::GCN;
  Head head = Head::GAE;
  int o = 0;  // 0 selects the tuned value for the dataset, else round(k / 3)
  int k = 0;  // 0 selects the number of classes
  double lr = 0.01;
  double weight_decay = 0.0;
  std::size_t hidden = 128;
  std::size_t out = 128;  // embedding width per stream for link prediction
  int layers = 2;         // SGCN depth; GCN is always two layers
  int epochs = 0;         // 0 selects 400 (link) or 200 (node)
  std::vector<std::uint64_t> seeds{0};
  int split = 3;
  double alpha = 0.8;
  bool sgcn_plus = false;
  bool dense_loss = false;
  ReconLoss loss = ReconLoss::BCE;
  double gncn_scale = 1.8;
  GateMode gate = GateMode::Learned;
  bool unshared_streams = false;
  // embedding used to extract negative pseudo partial labels
  EncoderKind np2e_encoder = EncoderKind::GaeGcn;
  int np2e_epochs = 200;
  double np2e_lr = 0.01;
  double np2e_weight_decay = 0.0;
};

/// Learning rate, weight decay and partial label count found by grid search
/// for the benchmark datasets.
struct TunedSetting {
  int o = 0;  // 0 when the model has no partial labels
  double lr = 0.0;
  double weight_decay = 0.0;
};

std::optional<TunedSetting> tuned_setting(const std::string& dataset, Task task, ModelKind model, Head head,
                                          int split);

/// Fills k, o and epochs from the dataset and defaults; validates ranges.
ExperimentConfig resolve_config(const ExperimentConfig& cfg, const Dataset& ds);

struct RecallPoint {
  int o = 0;
  double ground_truth_pairs = 0.0;
  double predicted_pairs = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  int best_epoch = -1;
  double val_auc = 0.0, val_ap = 0.0, test_auc = 0.0, test_ap = 0.0;
  double val_accuracy = 0.0, test_accuracy = 0.0;
  std::size_t positive_edges = 0;
  std::uint64_t negative_edges = 0;
  std::size_t dropped_edges = 0;
  std::optional<EdgeQuality> quality;
  std::vector<RecallPoint> recall_curve;  // o = 1..k on one clustering
};

struct MetricsRecord {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  MeanStd auc, ap, accuracy;
  MeanStd val_metric;  // val AUC (link) or val accuracy (node)
  double wrong_ratio = 0.0;
  double bridging_ratio = 0.0;
  double wall_seconds = 0.0;  // reported in summary.csv only
};

/// Throws std::logic_error if a held-out positive edge appears in the training
/// graph or in either view of the signed graph.
void assert_no_leakage(const EdgeSplit& split, const Graph& train, const SignedGraph* s);

MetricsRecord run_link_prediction(const Dataset& ds, const ExperimentConfig& cfg);
MetricsRecord run_node_classification(const Dataset& ds, const ExperimentConfig& cfg);
MetricsRecord run_experiment(const Dataset& ds, const ExperimentConfig& cfg);

const std::vector<double>& grid_learning_rates();
const std::vector<double>& grid_weight_decays();

struct GridResult {
  std::vector<MetricsRecord> cells;
  std::size_t best = 0;  // highest mean validation metric, first on ties
};

GridResult run_grid(const Dataset& ds, const ExperimentConfig& cfg,
                    const std::vector<double>& lrs = grid_learning_rates(),
                    const std::vector<double>& wds = grid_weight_decays());

/// File-name-safe identifier built from the configuration.
std::string run_id(const ExperimentConfig& cfg);

/// Configuration and metrics as JSON. Contains nothing run-dependent beyond
/// the config and seeds, so repeated runs serialize identically.
std::string record_json(const MetricsRecord& r);

/// Writes <out>/<run-id>.json and appends to summary.csv, recall_curve.csv
/// and edge_quality.csv.
void persist_record(const MetricsRecord& r, const std::filesystem::path& out_dir);

}  // namespace np2l
