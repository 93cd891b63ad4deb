#include "np2l/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "np2l/adam.hpp"
#include "np2l/splits.hpp"

namespace np2l {

namespace fs = std::filesystem;
using ad::Tensor;

// ---------------------------------------------------------------------------
// names

Task task_from_string(const std::string& s) {
  if (s == "link") return Task::LinkPrediction;
  if (s == "node") return Task::NodeClassification;
  throw std::invalid_argument("unknown task '" + s + "' (link, node)");
}

ModelKind model_from_string(const std::string& s) {
  if (s == "gcn") return ModelKind::GCN;
  if (s == "sgcn") return ModelKind::SGCN;
  if (s == "gncn") return ModelKind::GNCN;
  if (s == "sgncn") return ModelKind::SGNCN;
  throw std::invalid_argument("unknown model '" + s + "' (gcn, sgcn, gncn, sgncn)");
}

Head head_from_string(const std::string& s) {
  if (s == "gae") return Head::GAE;
  if (s == "vgae") return Head::VGAE;
  if (s == "none") return Head::None;
  throw std::invalid_argument("unknown head '" + s + "' (gae, vgae, none)");
}

GateMode gate_from_string(const std::string& s) {
  if (s == "learned") return GateMode::Learned;
  if (s == "closed") return GateMode::Closed;
  if (s == "open") return GateMode::Open;
  throw std::invalid_argument("unknown gate mode '" + s + "' (learned, closed, open)");
}

std::string to_string(Task t) { return t == Task::LinkPrediction ? "link" : "node"; }

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::GCN: return "gcn";
    case ModelKind::SGCN: return "sgcn";
    case ModelKind::GNCN: return "gncn";
    case ModelKind::SGNCN: return "sgncn";
  }
  return "?";
}

std::string to_string(Head h) {
  switch (h) {
    case Head::GAE: return "gae";
    case Head::VGAE: return "vgae";
    case Head::None: return "none";
  }
  return "?";
}

std::string to_string(GateMode g) {
  switch (g) {
    case GateMode::Learned: return "learned";
    case GateMode::Closed: return "closed";
    case GateMode::Open: return "open";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// tuned settings

namespace {

struct TunedRow {
  const char* dataset;
  Task task;
  ModelKind model;
  Head head;  // ignored for node classification
  int split;  // 0 for link prediction
  int o;
  double lr;
  double wd;
};

constexpr Task L = Task::LinkPrediction;
constexpr Task N = Task::NodeClassification;
constexpr Head GAE = Head::GAE;
constexpr Head VGAE = Head::VGAE;
constexpr Head NONE = Head::None;
constexpr ModelKind GCN = ModelKind::GCN;
constexpr ModelKind SGCN = ModelKind::SGCN;
constexpr ModelKind GNCN = ModelKind::GNCN;
constexpr ModelKind SGNCN = ModelKind::SGNCN;

const TunedRow kTuned[] = {
    // link prediction
    {"photo", L, GCN, GAE, 0, 0, 0.01, 5e-1},
    {"computers", L, GCN, GAE, 0, 0, 0.01, 5e-1},
    {"cs", L, GCN, GAE, 0, 0, 0.01, 1e-4},
    {"cora", L, GCN, GAE, 0, 0, 0.01, 5e-1},
    {"citeseer", L, GCN, GAE, 0, 0, 0.01, 1e-3},
    {"chameleon", L, GCN, GAE, 0, 0, 0.01, 5e-1},
    {"squirrel", L, GCN, GAE, 0, 0, 0.01, 5e-1},
    {"photo", L, SGCN, GAE, 0, 4, 0.01, 5e-1},
    {"computers", L, SGCN, GAE, 0, 5, 0.01, 5e-1},
    {"cs", L, SGCN, GAE, 0, 7, 0.01, 1e-3},
    {"cora", L, SGCN, GAE, 0, 3, 0.01, 5e-1},
    {"citeseer", L, SGCN, GAE, 0, 2, 0.01, 1e-3},
    {"chameleon", L, SGCN, GAE, 0, 2, 0.01, 5e-1},
    {"squirrel", L, SGCN, GAE, 0, 2, 0.01, 5e-1},
    {"photo", L, GCN, VGAE, 0, 0, 0.01, 1e-4},
    {"computers", L, GCN, VGAE, 0, 0, 0.01, 5e-1},
    {"cs", L, GCN, VGAE, 0, 0, 0.01, 1e-4},
    {"cora", L, GCN, VGAE, 0, 0, 0.01, 5e-1},
    {"citeseer", L, GCN, VGAE, 0, 0, 0.01, 1e-4},
    {"chameleon", L, GCN, VGAE, 0, 0, 0.01, 5e-1},
    {"squirrel", L, GCN, VGAE, 0, 0, 0.01, 5e-1},
    {"photo", L, SGCN, VGAE, 0, 4, 0.01, 1e-4},
    {"computers", L, SGCN, VGAE, 0, 5, 0.01, 5e-1},
    {"cs", L, SGCN, VGAE, 0, 7, 0.01, 5e-1},
    {"cora", L, SGCN, VGAE, 0, 3, 0.01, 5e-1},
    {"citeseer", L, SGCN, VGAE, 0, 2, 0.01, 1e-4},
    {"chameleon", L, SGCN, VGAE, 0, 2, 0.01, 5e-1},
    {"squirrel", L, SGCN, VGAE, 0, 2, 0.01, 5e-1},
    {"photo", L, GNCN, GAE, 0, 0, 0.1, 1e-3},
    {"computers", L, GNCN, GAE, 0, 0, 0.1, 1e-3},
    {"cs", L, GNCN, GAE, 0, 0, 0.1, 1e-2},
    {"cora", L, GNCN, GAE, 0, 0, 0.1, 1e-3},
    {"citeseer", L, GNCN, GAE, 0, 0, 0.1, 1e-3},
    {"chameleon", L, GNCN, GAE, 0, 0, 0.1, 5e-1},
    {"squirrel", L, GNCN, GAE, 0, 0, 0.1, 1e-3},
    {"photo", L, SGNCN, GAE, 0, 4, 0.1, 1e-3},
    {"computers", L, SGNCN, GAE, 0, 5, 0.1, 1e-3},
    {"cs", L, SGNCN, GAE, 0, 7, 0.1, 1e-2},
    {"cora", L, SGNCN, GAE, 0, 3, 0.1, 5e-1},
    {"citeseer", L, SGNCN, GAE, 0, 2, 0.1, 1e-3},
    {"chameleon", L, SGNCN, GAE, 0, 2, 0.1, 5e-1},
    {"squirrel", L, SGNCN, GAE, 0, 2, 0.1, 5e-1},
    {"photo", L, GNCN, VGAE, 0, 0, 0.1, 1e-3},
    {"computers", L, GNCN, VGAE, 0, 0, 0.1, 1e-4},
    {"cs", L, GNCN, VGAE, 0, 0, 0.1, 1e-4},
    {"cora", L, GNCN, VGAE, 0, 0, 0.1, 5e-1},
    {"citeseer", L, GNCN, VGAE, 0, 0, 0.1, 1e-3},
    {"chameleon", L, GNCN, VGAE, 0, 0, 0.1, 1e-4},
    {"squirrel", L, GNCN, VGAE, 0, 0, 0.1, 1e-4},
    {"photo", L, SGNCN, VGAE, 0, 4, 0.1, 1e-3},
    {"computers", L, SGNCN, VGAE, 0, 5, 0.1, 1e-4},
    {"cora", L, SGNCN, VGAE, 0, 3, 0.1, 1e-4},
    {"citeseer", L, SGNCN, VGAE, 0, 2, 0.1, 1e-3},
    {"chameleon", L, SGNCN, VGAE, 0, 2, 0.1, 1e-4},
    {"squirrel", L, SGNCN, VGAE, 0, 2, 0.1, 5e-1},
    // node classification
    {"photo", N, GCN, NONE, 1, 0, 0.01, 0.0},
    {"photo", N, GCN, NONE, 2, 0, 0.001, 0.0},
    {"photo", N, GCN, NONE, 3, 0, 0.001, 0.0},
    {"computers", N, GCN, NONE, 1, 0, 0.001, 0.0},
    {"computers", N, GCN, NONE, 2, 0, 0.001, 0.0},
    {"computers", N, GCN, NONE, 3, 0, 0.001, 0.0},
    {"cs", N, GCN, NONE, 1, 0, 0.001, 1e-3},
    {"cs", N, GCN, NONE, 2, 0, 0.01, 1e-3},
    {"cs", N, GCN, NONE, 3, 0, 0.01, 1e-3},
    {"actor", N, GCN, NONE, 1, 0, 0.001, 1e-2},
    {"actor", N, GCN, NONE, 2, 0, 0.001, 1e-2},
    {"actor", N, GCN, NONE, 3, 0, 0.01, 1e-2},
    {"chameleon", N, GCN, NONE, 1, 0, 0.05, 0.0},
    {"chameleon", N, GCN, NONE, 2, 0, 0.001, 5e-2},
    {"chameleon", N, GCN, NONE, 3, 0, 0.05, 0.0},
    {"squirrel", N, GCN, NONE, 1, 0, 0.01, 1e-3},
    {"squirrel", N, GCN, NONE, 2, 0, 0.001, 1e-3},
    {"squirrel", N, GCN, NONE, 3, 0, 0.001, 1e-3},
    {"cornell", N, GCN, NONE, 1, 0, 0.01, 5e-2},
    {"cornell", N, GCN, NONE, 2, 0, 0.05, 5e-2},
    {"cornell", N, GCN, NONE, 3, 0, 0.01, 1e-2},
    {"texas", N, GCN, NONE, 1, 0, 0.05, 5e-2},
    {"texas", N, GCN, NONE, 2, 0, 0.01, 5e-2},
    {"texas", N, GCN, NONE, 3, 0, 0.05, 5e-2},
    {"wisconsin", N, GCN, NONE, 1, 0, 0.05, 5e-2},
    {"wisconsin", N, GCN, NONE, 2, 0, 0.01, 5e-2},
    {"wisconsin", N, GCN, NONE, 3, 0, 0.001, 5e-2},
    {"photo", N, SGCN, NONE, 1, 4, 0.001, 1e-2},
    {"photo", N, SGCN, NONE, 2, 4, 0.001, 1e-2},
    {"photo", N, SGCN, NONE, 3, 4, 0.001, 1e-2},
    {"computers", N, SGCN, NONE, 1, 5, 0.001, 1e-2},
    {"computers", N, SGCN, NONE, 2, 5, 0.001, 1e-2},
    {"computers", N, SGCN, NONE, 3, 5, 0.001, 1e-2},
    {"cs", N, SGCN, NONE, 1, 6, 0.001, 1e-3},
    {"cs", N, SGCN, NONE, 2, 6, 0.001, 1e-3},
    {"cs", N, SGCN, NONE, 3, 6, 0.01, 1e-3},
    {"actor", N, SGCN, NONE, 1, 2, 0.01, 1e-2},
    {"actor", N, SGCN, NONE, 2, 2, 0.001, 1e-3},
    {"actor", N, SGCN, NONE, 3, 2, 0.1, 1e-2},
    {"chameleon", N, SGCN, NONE, 1, 2, 0.001, 0.0},
    {"chameleon", N, SGCN, NONE, 2, 2, 0.001, 0.0},
    {"chameleon", N, SGCN, NONE, 3, 2, 0.001, 0.0},
    {"squirrel", N, SGCN, NONE, 1, 2, 0.01, 1e-3},
    {"squirrel", N, SGCN, NONE, 2, 2, 0.01, 1e-3},
    {"squirrel", N, SGCN, NONE, 3, 2, 0.01, 1e-3},
    {"cornell", N, SGCN, NONE, 1, 2, 0.05, 5e-2},
    {"cornell", N, SGCN, NONE, 2, 2, 0.1, 1e-2},
    {"cornell", N, SGCN, NONE, 3, 2, 0.01, 1e-2},
    {"texas", N, SGCN, NONE, 1, 2, 0.01, 1e-2},
    {"texas", N, SGCN, NONE, 2, 2, 0.01, 1e-2},
    {"texas", N, SGCN, NONE, 3, 2, 0.01, 1e-3},
    {"wisconsin", N, SGCN, NONE, 1, 2, 0.01, 1e-3},
    {"wisconsin", N, SGCN, NONE, 2, 2, 0.01, 5e-2},
    {"wisconsin", N, SGCN, NONE, 3, 2, 0.01, 5e-2},
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::optional<TunedSetting> tuned_setting(const std::string& dataset, Task task, ModelKind model, Head head,
                                          int split) {
  const std::string name = lower(dataset);
  for (const TunedRow& r : kTuned) {
    if (name != r.dataset || task != r.task || model != r.model) continue;
    if (task == Task::LinkPrediction && head != r.head) continue;
    if (task == Task::NodeClassification && split != r.split) continue;
    return TunedSetting{r.o, r.lr, r.wd};
  }
  return std::nullopt;
}

ExperimentConfig resolve_config(const ExperimentConfig& in, const Dataset& ds) {
  ExperimentConfig c = in;
  if (c.dataset.empty()) c.dataset = ds.name;
  const std::size_t n = ds.graph.num_nodes();
  if (c.k <= 0) c.k = ds.labels.num_classes;
  if (c.k < 1 || c.k > kMaxClusters || static_cast<std::size_t>(c.k) > n)
    throw std::invalid_argument("k=" + std::to_string(c.k) + " must lie in [1, min(64, n)]");
  if (is_signed(c.model)) {
    if (c.o <= 0) {
      const auto t = tuned_setting(c.dataset, c.task, c.model, c.head, c.split);
      c.o = t && t->o > 0 ? t->o : std::max(1, static_cast<int>(std::lround(c.k / 3.0)));
    }
    if (c.o > c.k) throw std::invalid_argument("o=" + std::to_string(c.o) + " exceeds k=" + std::to_string(c.k));
  } else {
    c.o = 0;
  }
  if (c.epochs <= 0) c.epochs = c.task == Task::LinkPrediction ? 400 : 200;
  if (c.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (c.task == Task::NodeClassification) {
    split_strategy_from_int(c.split);
    c.head = Head::None;
  } else if (c.head == Head::None) {
    throw std::invalid_argument("link prediction needs --head gae or vgae");
  }
  if (c.sgcn_plus && (c.task != Task::NodeClassification || !is_signed(c.model)))
    throw std::invalid_argument("--sgcn-plus applies to node classification with a signed model");
  if (!(c.lr > 0.0) || c.weight_decay < 0.0) throw std::invalid_argument("lr must be > 0 and wd >= 0");
  if (c.hidden == 0 || c.out == 0 || c.layers < 1) throw std::invalid_argument("bad layer sizes");
  return c;
}

// ---------------------------------------------------------------------------
// shared pieces

namespace {

std::uint64_t derived_seed(std::uint64_t seed, const char* purpose) {
  return Rng::derive(seed, purpose).next_u64();
}

Np2eConfig np2e_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  Np2eConfig c;
  c.encoder = cfg.np2e_encoder;
  c.dims = EncoderDims{0, cfg.hidden, cfg.out};
  c.gncn_scale = cfg.gncn_scale;
  c.train.epochs = cfg.np2e_epochs;
  c.train.lr = cfg.np2e_lr;
  c.train.weight_decay = cfg.np2e_weight_decay;
  c.train.seed = derived_seed(seed, "np2e.train");
  c.train.dense_loss = cfg.dense_loss;
  c.train.loss = cfg.loss;
  c.kmeans.seed = derived_seed(seed, "np2e.kmeans");
  return c;
}

std::vector<RecallPoint> recall_curve(const Np2eResult& r, const LabelVector& y) {
  std::vector<RecallPoint> out;
  for (int o = 1; o <= r.partial.k; ++o) {
    const PartialLabelAssignment p = partial_labels(r.distances, o);
    out.push_back({o, recall_score(p, y, RecallDenominator::GroundTruthPairs).recall,
                   recall_score(p, y, RecallDenominator::PredictedPairs).recall});
  }
  return out;
}

std::unique_ptr<Encoder> build_encoder(const ExperimentConfig& cfg, const SparseRef& x, const Graph& graph,
                                       const SignedGraph* s, EncoderDims dims, Head head, std::uint64_t seed) {
  Rng init = Rng::derive(seed, "model.init");
  switch (cfg.model) {
    case ModelKind::GCN:
      return std::make_unique<GcnEncoder>(x, std::make_shared<SparseMatrix>(gcn_normalized_adjacency(graph)),
                                          dims, head, init);
    case ModelKind::GNCN:
      return std::make_unique<GncnEncoder>(x, std::make_shared<SparseMatrix>(gcn_normalized_adjacency(graph)),
                                           dims, head, cfg.gncn_scale, init);
    case ModelKind::SGCN: {
      const SignedViews v = make_signed_views(*s);
      return std::make_unique<SgcnEncoder>(x, v.pos_mean, v.neg_mean, dims, head, init, cfg.layers);
    }
    case ModelKind::SGNCN: {
      const SignedViews v = make_signed_views(*s);
      auto base = std::make_shared<GncnEncoder>(x, v.pos_sym, dims, head, cfg.gncn_scale, init);
      std::shared_ptr<AdjacencyEncoder> neg_base;
      if (cfg.unshared_streams) {
        Rng neg_init = Rng::derive(seed, "model.init.neg");
        neg_base = std::make_shared<GncnEncoder>(x, v.neg_sym, dims, head, cfg.gncn_scale, neg_init);
      }
      Rng gate_rng = Rng::derive(seed, "model.gate");
      return std::make_unique<TwoStreamEncoder>(base, v.pos_sym, v.neg_sym, cfg.gate, gate_rng, neg_base);
    }
  }
  throw std::logic_error("unhandled model kind");
}

void fill_signed_stats(RunRecord& rec, const SignedGraph& s) {
  rec.positive_edges = s.positive.num_edges();
  rec.negative_edges = s.negative.count();
  rec.dropped_edges = s.dropped.size();
}

void summarize(MetricsRecord& m) {
  std::vector<double> auc, ap, acc, val, wrong, bridging;
  for (const RunRecord& r : m.runs) {
    if (m.config.task == Task::LinkPrediction) {
      auc.push_back(r.test_auc);
      ap.push_back(r.test_ap);
      val.push_back(r.val_auc);
    } else {
      acc.push_back(r.test_accuracy);
      val.push_back(r.val_accuracy);
    }
    if (r.quality) {
      wrong.push_back(r.quality->wrong_ratio);
      bridging.push_back(r.quality->bridging_ratio);
    }
  }
  m.auc = mean_std(auc);
  m.ap = mean_std(ap);
  m.accuracy = mean_std(acc);
  m.val_metric = mean_std(val);
  m.wrong_ratio = mean_std(wrong).mean;
  m.bridging_ratio = mean_std(bridging).mean;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void assert_no_leakage(const EdgeSplit& split, const Graph& train, const SignedGraph* s) {
  for (const auto* set : {&split.val_edges, &split.test_edges})
    for (const NodePair& e : *set) {
      const std::string pair = "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
      if (train.has_edge(e.u, e.v)) throw std::logic_error("leakage: held-out edge " + pair + " in training graph");
      if (s && s->positive.has_edge(e.u, e.v))
        throw std::logic_error("leakage: held-out edge " + pair + " in positive view");
      if (s && s->negative.contains(e.u, e.v))
        throw std::logic_error("leakage: held-out edge " + pair + " in negative view");
    }
}

// ---------------------------------------------------------------------------
// link prediction

MetricsRecord run_link_prediction(const Dataset& ds, const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  MetricsRecord m;
  m.config = resolve_config(config, ds);
  if (m.config.task != Task::LinkPrediction) throw std::invalid_argument("run_link_prediction: task is not link");
  const ExperimentConfig& cfg = m.config;
  const std::size_t n = ds.graph.num_nodes();
  const auto x = std::make_shared<SparseMatrix>(ds.features.x);

  for (std::uint64_t seed : cfg.seeds) {
    RunRecord rec;
    rec.seed = seed;
    const EdgeSplit split = split_edges(ds.graph, cfg.alpha, seed);
    const Graph train = split.train_graph(n);

    std::optional<SignedGraph> sg;
    if (is_signed(cfg.model)) {
      Np2eConfig nc = np2e_config(cfg, seed);
      nc.exclude = split.held_out_pairs();
      Np2eResult r = run_np2e(train, ds.features, cfg.k, cfg.o, nc, &ds.labels);
      rec.recall_curve = recall_curve(r, ds.labels);
      sg = std::move(r.signed_graph);
      fill_signed_stats(rec, *sg);
      rec.quality = edge_quality_report(*sg, ds.labels, std::vector<bool>(n, false));
    } else {
      rec.positive_edges = train.num_edges();
    }
    assert_no_leakage(split, train, sg ? &*sg : nullptr);

    const EncoderDims dims{x->cols(), cfg.hidden, cfg.out};
    auto enc = build_encoder(cfg, x, train, sg ? &*sg : nullptr, dims, cfg.head, seed);
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.lr = cfg.lr;
    tc.weight_decay = cfg.weight_decay;
    tc.seed = derived_seed(seed, "model.train");
    tc.dense_loss = cfg.dense_loss;
    tc.loss = cfg.loss;
    tc.validate = [&](const Matrix& z) { return link_auc_ap(z, split.val_edges, split.val_neg).auc; };
    const TrainResult tr = train_embedding(*enc, train, tc);

    const AucAp val = link_auc_ap(tr.z, split.val_edges, split.val_neg);
    const AucAp test = link_auc_ap(tr.z, split.test_edges, split.test_neg);
    rec.best_epoch = tr.best_epoch;
    rec.val_auc = val.auc;
    rec.val_ap = val.ap;
    rec.test_auc = test.auc;
    rec.test_ap = test.ap;
    m.runs.push_back(std::move(rec));
  }
  summarize(m);
  m.wall_seconds = seconds_since(t0);
  return m;
}

// ---------------------------------------------------------------------------
// node classification

MetricsRecord run_node_classification(const Dataset& ds, const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  MetricsRecord m;
  m.config = resolve_config(config, ds);
  if (m.config.task != Task::NodeClassification)
    throw std::invalid_argument("run_node_classification: task is not node");
  const ExperimentConfig& cfg = m.config;
  const auto x = std::make_shared<SparseMatrix>(ds.features.x);
  const auto classes = static_cast<std::size_t>(ds.labels.num_classes);

  for (std::uint64_t seed : cfg.seeds) {
    RunRecord rec;
    rec.seed = seed;
    const NodeSplit split = split_nodes(ds.labels, split_strategy_from_int(cfg.split), seed);
    const auto train_rows = split.train_nodes();
    const auto val_rows = split.val_nodes();
    const auto test_rows = split.test_nodes();
    if (train_rows.empty() || val_rows.empty() || test_rows.empty())
      throw std::invalid_argument("node split left an empty train/val/test set");

    std::optional<SignedGraph> sg;
    if (is_signed(cfg.model)) {
      Np2eResult r = run_np2e(ds.graph, ds.features, cfg.k, cfg.o, np2e_config(cfg, seed), &ds.labels);
      rec.recall_curve = recall_curve(r, ds.labels);
      sg = std::move(r.signed_graph);
      if (cfg.sgcn_plus) sg = sgcn_plus_filter(*sg, ds.labels, split.train_mask);
      fill_signed_stats(rec, *sg);
      rec.quality = edge_quality_report(*sg, ds.labels, split.train_mask);
    } else {
      rec.positive_edges = ds.graph.num_edges();
    }

    const EncoderDims dims{x->cols(), cfg.hidden, classes};
    auto enc = build_encoder(cfg, x, ds.graph, sg ? &*sg : nullptr, dims, Head::None, seed);
    std::vector<Tensor> params;
    for (const auto& p : enc->parameters()) params.push_back(p.tensor);
    Tensor readout;
    if (enc->output_dim() != classes) {
      Rng rr = Rng::derive(seed, "model.readout");
      readout = glorot(enc->output_dim(), classes, rr);
      params.push_back(readout);
    }
    auto logits_of = [&]() {
      const Tensor z = enc->encode().mu;
      return readout.defined() ? ad::matmul(z, readout) : z;
    };

    Adam opt(params, AdamOptions{.lr = cfg.lr, .weight_decay = cfg.weight_decay});
    double best_val = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      opt.zero_grad();
      try {
        const Tensor loss = ad::softmax_cross_entropy(logits_of(), ds.labels.y, train_rows);
        loss.backward();
        opt.step();
      } catch (const NumericError& e) {
        throw NumericError("node classification: epoch " + std::to_string(epoch) + ": " + e.what());
      }
      const Matrix logits = logits_of().value();
      const double val = accuracy(logits, ds.labels.y, val_rows);
      if (val > best_val) {
        best_val = val;
        rec.best_epoch = epoch;
        rec.val_accuracy = val;
        rec.test_accuracy = accuracy(logits, ds.labels.y, test_rows);
      }
    }
    m.runs.push_back(std::move(rec));
  }
  summarize(m);
  m.wall_seconds = seconds_since(t0);
  return m;
}

MetricsRecord run_experiment(const Dataset& ds, const ExperimentConfig& cfg) {
  return cfg.task == Task::LinkPrediction ? run_link_prediction(ds, cfg) : run_node_classification(ds, cfg);
}

// ---------------------------------------------------------------------------
// grid

const std::vector<double>& grid_learning_rates() {
  static const std::vector<double> v{0.001, 0.01, 0.05, 0.1, 0.5};
  return v;
}

const std::vector<double>& grid_weight_decays() {
  static const std::vector<double> v{0.0, 1e-4, 1e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0};
  return v;
}

GridResult run_grid(const Dataset& ds, const ExperimentConfig& cfg, const std::vector<double>& lrs,
                    const std::vector<double>& wds) {
  if (lrs.empty() || wds.empty()) throw std::invalid_argument("run_grid: empty grid");
  GridResult g;
  for (double lr : lrs)
    for (double wd : wds) {
      ExperimentConfig c = cfg;
      c.lr = lr;
      c.weight_decay = wd;
      g.cells.push_back(run_experiment(ds, c));
      if (g.cells.back().val_metric.mean > g.cells[g.best].val_metric.mean) g.best = g.cells.size() - 1;
    }
  return g;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string csv_number(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["dataset"] = c.dataset;
  j["task"] = to_string(c.task);
  j["model"] = to_string(c.model);
  j["head"] = to_string(c.head);
  j["o"] = c.o;
  j["k"] = c.k;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["hidden"] = c.hidden;
  j["out"] = c.out;
  j["layers"] = c.layers;
  j["epochs"] = c.epochs;
  j["seeds"] = c.seeds;
  j["split"] = c.split;
  j["alpha"] = c.alpha;
  j["sgcn_plus"] = c.sgcn_plus;
  j["dense_loss"] = c.dense_loss;
  j["loss"] = c.loss == ReconLoss::BCE ? "bce" : "mse";
  j["gncn_scale"] = c.gncn_scale;
  j["gate"] = to_string(c.gate);
  j["unshared_streams"] = c.unshared_streams;
  j["np2e_encoder"] = to_string(c.np2e_encoder);
  j["np2e_epochs"] = c.np2e_epochs;
  j["np2e_lr"] = c.np2e_lr;
  j["np2e_weight_decay"] = c.np2e_weight_decay;
  return j;
}

nlohmann::ordered_json run_json(const RunRecord& r, Task task) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["best_epoch"] = r.best_epoch;
  if (task == Task::LinkPrediction) {
    j["val_auc"] = r.val_auc;
    j["val_ap"] = r.val_ap;
    j["test_auc"] = r.test_auc;
    j["test_ap"] = r.test_ap;
  } else {
    j["val_accuracy"] = r.val_accuracy;
    j["test_accuracy"] = r.test_accuracy;
  }
  j["positive_edges"] = r.positive_edges;
  j["negative_edges"] = r.negative_edges;
  j["dropped_edges"] = r.dropped_edges;
  if (r.quality) {
    j["edge_quality"] = {{"wrong", r.quality->wrong},
                         {"bridging", r.quality->bridging},
                         {"wrong_train", r.quality->wrong_train},
                         {"wrong_ratio", r.quality->wrong_ratio},
                         {"bridging_ratio", r.quality->bridging_ratio}};
  }
  if (!r.recall_curve.empty()) {
    auto& arr = j["recall_curve"] = nlohmann::ordered_json::array();
    for (const RecallPoint& p : r.recall_curve)
      arr.push_back({{"o", p.o}, {"ground_truth_pairs", p.ground_truth_pairs}, {"predicted_pairs", p.predicted_pairs}});
  }
  return j;
}

nlohmann::ordered_json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

void append_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (fresh) out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

}  // namespace

std::string run_id(const ExperimentConfig& c) {
  std::string id = to_string(c.task) + "-" + lower(c.dataset) + "-";
  if (c.task == Task::LinkPrediction) id += to_string(c.head) + "-";
  id += to_string(c.model);
  if (c.sgcn_plus) id += "plus";
  if (is_signed(c.model)) id += "-o" + std::to_string(c.o);
  if (c.task == Task::NodeClassification) id += "-split" + std::to_string(c.split);
  id += "-lr" + fmt_number(c.lr) + "-wd" + fmt_number(c.weight_decay);
  if (c.model == ModelKind::SGNCN && c.gate != GateMode::Learned) id += "-gate" + to_string(c.gate);
  id += "-seed" + std::to_string(c.seeds.front());
  if (c.seeds.size() > 1) id += "x" + std::to_string(c.seeds.size());
  for (char& ch : id)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' || ch == '_')) ch = '_';
  return id;
}

std::string record_json(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["run_id"] = run_id(r.config);
  j["config"] = config_json(r.config);
  auto& runs = j["runs"] = nlohmann::ordered_json::array();
  for (const RunRecord& run : r.runs) runs.push_back(run_json(run, r.config.task));
  nlohmann::ordered_json s;
  if (r.config.task == Task::LinkPrediction) {
    s["auc"] = mean_std_json(r.auc);
    s["ap"] = mean_std_json(r.ap);
  } else {
    s["accuracy"] = mean_std_json(r.accuracy);
  }
  s["val_metric"] = mean_std_json(r.val_metric);
  if (is_signed(r.config.model)) {
    s["wrong_negative_ratio"] = r.wrong_ratio;
    s["bridging_ratio"] = r.bridging_ratio;
  }
  j["summary"] = s;
  return j.dump(2) + "\n";
}

void persist_record(const MetricsRecord& r, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string id = run_id(r.config);
  {
    std::ofstream out(out_dir / (id + ".json"));
    if (!out) throw std::runtime_error("cannot write " + (out_dir / (id + ".json")).string());
    out << record_json(r);
  }
  const ExperimentConfig& c = r.config;
  append_csv(out_dir / "summary.csv",
             "run_id,task,dataset,model,head,o,split,lr,weight_decay,seeds,auc_mean,auc_std,ap_mean,ap_std,"
             "accuracy_mean,accuracy_std,val_metric_mean,wrong_negative_ratio,bridging_ratio,wall_seconds",
             {id + "," + to_string(c.task) + "," + c.dataset + "," + to_string(c.model) + (c.sgcn_plus ? "+" : "") +
              "," + to_string(c.head) + "," + std::to_string(c.o) + "," + std::to_string(c.split) + "," +
              csv_number(c.lr) + "," + csv_number(c.weight_decay) + "," + std::to_string(c.seeds.size()) + "," +
              csv_number(r.auc.mean) + "," + csv_number(r.auc.std) + "," + csv_number(r.ap.mean) + "," +
              csv_number(r.ap.std) + "," + csv_number(r.accuracy.mean) + "," + csv_number(r.accuracy.std) + "," +
              csv_number(r.val_metric.mean) + "," + csv_number(r.wrong_ratio) + "," + csv_number(r.bridging_ratio) +
              "," + csv_number(r.wall_seconds)});

  std::vector<std::string> recall_rows, quality_rows;
  for (const RunRecord& run : r.runs) {
    for (const RecallPoint& p : run.recall_curve)
      recall_rows.push_back(id + "," + c.dataset + "," + std::to_string(run.seed) + "," + std::to_string(p.o) + "," +
                            csv_number(p.ground_truth_pairs) + "," + csv_number(p.predicted_pairs));
    if (run.quality)
      quality_rows.push_back(id + "," + c.dataset + "," + std::to_string(c.split) + "," + std::to_string(run.seed) +
                             "," + std::to_string(c.o) + "," + std::to_string(run.quality->negative_edges) + "," +
                             csv_number(run.quality->wrong_ratio) + "," + csv_number(run.quality->bridging_ratio));
  }
  if (!recall_rows.empty())
    append_csv(out_dir / "recall_curve.csv", "run_id,dataset,seed,o,recall_ground_truth_pairs,recall_predicted_pairs",
               recall_rows);
  if (!quality_rows.empty())
    append_csv(out_dir / "edge_quality.csv",
               "run_id,dataset,split,seed,o,negative_edges,wrong_negative_ratio,bridging_ratio", quality_rows);
}

}  // namespace np2l
