// np2l: command-line front end for embedding, negative-edge extraction and
// the link prediction / node classification experiments.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>

#include <CLI11.hpp>
#include <json.hpp>

#include "np2l/dataset.hpp"
#include "np2l/experiments.hpp"
#include "np2l/np2e.hpp"

using namespace np2l;

namespace {

std::string default_data_dir() {
  const char* env = std::getenv("NP2L_DATA_DIR");
  return env && *env ? env : "data";
}

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct RunArgs {
  std::string task = "link", dataset, data_dir = default_data_dir(), model = "gcn", head = "gae";
  std::string out = "results", loss = "bce", gate = "learned", np2e_encoder = "gae-gcn";
  int o = 0, k = 0, split = 3, seeds = 0, epochs = 0, layers = 2, np2e_epochs = 200;
  std::uint64_t seed = 0;
  double lr = kUnset, wd = kUnset, alpha = 0.8, scale = 1.8, np2e_lr = 0.01, np2e_wd = 0.0;
  std::size_t hidden = 128, dim = 128;
  bool grid = false, sgcn_plus = false, dense_loss = false, unshared = false;
};

void print_record(const MetricsRecord& r) {
  const ExperimentConfig& c = r.config;
  std::cout << run_id(c) << ": ";
  if (c.task == Task::LinkPrediction)
    std::cout << "AUC " << 100 * r.auc.mean << " +- " << 100 * r.auc.std << ", AP " << 100 * r.ap.mean << " +- "
              << 100 * r.ap.std;
  else
    std::cout << "accuracy " << 100 * r.accuracy.mean << " +- " << 100 * r.accuracy.std;
  if (is_signed(c.model))
    std::cout << ", wrong negatives " << r.wrong_ratio << ", bridging " << r.bridging_ratio;
  std::cout << " (" << r.runs.size() << " seeds, " << r.wall_seconds << " s)\n";
}

int cmd_run(const RunArgs& a) {
  const Dataset ds = load_dataset(a.data_dir, a.dataset);
  ExperimentConfig cfg;
  cfg.dataset = a.dataset;
  cfg.task = task_from_string(a.task);
  cfg.model = model_from_string(a.model);
  cfg.head = cfg.task == Task::NodeClassification ? Head::None : head_from_string(a.head);
  cfg.o = a.o;
  cfg.k = a.k;
  cfg.split = a.split;
  cfg.epochs = a.epochs;
  cfg.layers = a.layers;
  cfg.hidden = a.hidden;
  cfg.out = a.dim;
  cfg.alpha = a.alpha;
  cfg.sgcn_plus = a.sgcn_plus;
  cfg.dense_loss = a.dense_loss;
  cfg.loss = a.loss == "mse" ? ReconLoss::MSE : ReconLoss::BCE;
  cfg.gncn_scale = a.scale;
  cfg.gate = gate_from_string(a.gate);
  cfg.unshared_streams = a.unshared;
  cfg.np2e_encoder = encoder_kind_from_string(a.np2e_encoder);
  cfg.np2e_epochs = a.np2e_epochs;
  cfg.np2e_lr = a.np2e_lr;
  cfg.np2e_weight_decay = a.np2e_wd;
  const int n_seeds = a.seeds > 0 ? a.seeds : (cfg.task == Task::NodeClassification ? 10 : 1);
  cfg.seeds.clear();
  for (int i = 0; i < n_seeds; ++i) cfg.seeds.push_back(a.seed + static_cast<std::uint64_t>(i));

  const auto tuned = tuned_setting(cfg.dataset, cfg.task, cfg.model, cfg.head, cfg.split);
  cfg.lr = !std::isnan(a.lr) ? a.lr : tuned ? tuned->lr : 0.01;
  cfg.weight_decay = !std::isnan(a.wd) ? a.wd : tuned ? tuned->weight_decay : 0.0;

  if (a.grid) {
    const GridResult g = run_grid(ds, cfg);
    for (const auto& cell : g.cells) {
      persist_record(cell, a.out);
      print_record(cell);
    }
    std::cout << "best: ";
    print_record(g.cells[g.best]);
    return 0;
  }
  const MetricsRecord r = run_experiment(ds, cfg);
  persist_record(r, a.out);
  print_record(r);
  return 0;
}

struct SignedArgs {
  std::string dataset, data_dir = default_data_dir(), encoder = "gae-gcn", out = "signed.json";
  int o = 0, k = 0, epochs = 200;
  double lr = 0.01, wd = 0.0;
  std::uint64_t seed = 0;
};

int cmd_build_signed(const SignedArgs& a) {
  const Dataset ds = load_dataset(a.data_dir, a.dataset);
  const int k = a.k > 0 ? a.k : ds.labels.num_classes;
  const int o = a.o > 0 ? a.o : std::max(1, static_cast<int>(std::lround(k / 3.0)));
  Np2eConfig cfg;
  cfg.encoder = encoder_kind_from_string(a.encoder);
  cfg.train.epochs = a.epochs;
  cfg.train.lr = a.lr;
  cfg.train.weight_decay = a.wd;
  cfg.train.seed = a.seed;
  cfg.kmeans.seed = a.seed;
  const Np2eResult r = run_np2e(ds.graph, ds.features, k, o, cfg, &ds.labels);
  const SignedGraph& s = r.signed_graph;

  nlohmann::ordered_json j;
  j["dataset"] = ds.name;
  j["n"] = s.num_nodes();
  j["k"] = k;
  j["o"] = o;
  j["encoder"] = a.encoder;
  j["seed"] = a.seed;
  auto pairs = [](const std::vector<NodePair>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : v) arr.push_back({e.u, e.v});
    return arr;
  };
  j["positive_edges"] = pairs(s.positive.edges());
  j["dropped_edges"] = pairs(s.dropped);
  j["mask_of_node"] = r.partial.masks;
  auto inc = nlohmann::ordered_json::array();
  for (const auto& [x, y] : r.relation.incompatible_pairs()) inc.push_back({x, y});
  j["incompatible_mask_pairs"] = inc;
  j["excluded_pairs"] = pairs(s.negative.excluded());
  j["negative_edge_count"] = s.negative.count();
  j["recall"] = {{"ground_truth_pairs", r.recall->recall},
                 {"predicted_pairs", recall_score(r.partial, ds.labels, RecallDenominator::PredictedPairs).recall}};
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << j.dump() << '\n';
  std::cout << ds.name << ": k=" << k << " o=" << o << ", " << s.positive.num_edges() << " positive, "
            << s.dropped.size() << " dropped, " << s.negative.count() << " negative edges, recall "
            << r.recall->recall << " -> " << a.out << '\n';
  return 0;
}

struct EmbedArgs {
  std::string dataset, data_dir = default_data_dir(), encoder = "gae-gcn", out = "embeddings.csv";
  int epochs = 200;
  double lr = 0.01, wd = 0.0;
  std::uint64_t seed = 0;
};

int cmd_embed(const EmbedArgs& a) {
  const Dataset ds = load_dataset(a.data_dir, a.dataset);
  Np2eConfig cfg;
  cfg.encoder = encoder_kind_from_string(a.encoder);
  cfg.train.epochs = a.epochs;
  cfg.train.lr = a.lr;
  cfg.train.weight_decay = a.wd;
  cfg.train.seed = a.seed;
  const Matrix z = np2e_embedding(ds.graph, ds.features, cfg);
  write_embeddings_csv(z, a.out);
  std::cout << ds.name << ": " << z.rows() << " x " << z.cols() << " embedding -> " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Negative pseudo partial label extraction and signed GNN experiments"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "train and evaluate a model over one or more seeds");
  run->add_option("--task", ra.task, "link | node")->check(CLI::IsMember({"link", "node"}));
  run->add_option("--dataset", ra.dataset, "dataset directory name")->required();
  run->add_option("--data-dir", ra.data_dir, "root holding dataset directories (env NP2L_DATA_DIR)");
  run->add_option("--model", ra.model, "gcn | sgcn | gncn | sgncn")->check(CLI::IsMember({"gcn", "sgcn", "gncn", "sgncn"}));
  run->add_option("--head", ra.head, "gae | vgae (link prediction)")->check(CLI::IsMember({"gae", "vgae"}));
  run->add_option("--o", ra.o, "partial labels per node (default: tuned value or k/3)");
  run->add_option("--k", ra.k, "clusters (default: number of classes)");
  run->add_option("--split", ra.split, "node split strategy 1 | 2 | 3")->check(CLI::Range(1, 3));
  run->add_option("--seed", ra.seed, "first seed");
  run->add_option("--seeds", ra.seeds, "number of consecutive seeds (default 1 link, 10 node)");
  run->add_option("--lr", ra.lr, "learning rate (default: tuned value or 0.01)");
  run->add_option("--wd", ra.wd, "weight decay (default: tuned value or 0)");
  run->add_flag("--grid", ra.grid, "sweep the 5 x 8 learning-rate / weight-decay grid");
  run->add_flag("--sgcn-plus", ra.sgcn_plus, "drop negative edges between same-label train nodes");
  run->add_option("--out", ra.out, "results directory");
  run->add_option("--epochs", ra.epochs, "training epochs (default 400 link, 200 node)");
  run->add_option("--hidden", ra.hidden, "hidden width");
  run->add_option("--dim", ra.dim, "embedding width per stream");
  run->add_option("--layers", ra.layers, "SGCN layers");
  run->add_option("--alpha", ra.alpha, "fraction of edges used for training");
  run->add_option("--scale", ra.scale, "GNCN norm scale");
  run->add_option("--loss", ra.loss, "bce | mse")->check(CLI::IsMember({"bce", "mse"}));
  run->add_flag("--dense-loss", ra.dense_loss, "score every adjacency entry instead of sampled pairs");
  run->add_option("--gate", ra.gate, "two-stream gate: learned | closed | open")
      ->check(CLI::IsMember({"learned", "closed", "open"}));
  run->add_flag("--unshared-streams", ra.unshared, "separate weights for the negative stream");
  run->add_option("--np2e-encoder", ra.np2e_encoder, "embedding used for partial labels");
  run->add_option("--np2e-epochs", ra.np2e_epochs, "epochs for that embedding");
  run->add_option("--np2e-lr", ra.np2e_lr, "learning rate for that embedding");
  run->add_option("--np2e-wd", ra.np2e_wd, "weight decay for that embedding");

  SignedArgs sa;
  auto* sign = app.add_subcommand("build-signed", "extract negative pseudo partial labels and write the signed graph");
  sign->add_option("--dataset", sa.dataset)->required();
  sign->add_option("--data-dir", sa.data_dir);
  sign->add_option("--o", sa.o, "partial labels per node (default k/3)");
  sign->add_option("--k", sa.k, "clusters (default: number of classes)");
  sign->add_option("--encoder", sa.encoder, "gae-gcn | vgae-gcn | gae-gncn | vgae-gncn");
  sign->add_option("--epochs", sa.epochs);
  sign->add_option("--lr", sa.lr);
  sign->add_option("--wd", sa.wd);
  sign->add_option("--seed", sa.seed);
  sign->add_option("--out", sa.out);

  EmbedArgs ea;
  auto* embed = app.add_subcommand("embed", "train an auto-encoder and write node embeddings");
  embed->add_option("--dataset", ea.dataset)->required();
  embed->add_option("--data-dir", ea.data_dir);
  embed->add_option("--encoder", ea.encoder);
  embed->add_option("--epochs", ea.epochs);
  embed->add_option("--lr", ea.lr);
  embed->add_option("--wd", ea.wd);
  embed->add_option("--seed", ea.seed);
  embed->add_option("--out", ea.out);

  SyntheticSpec spec;
  std::string synth_out = "data/synthetic";
  auto* synth = app.add_subcommand("make-synthetic", "write a contextual stochastic block model dataset");
  synth->add_option("--out", synth_out);
  synth->add_option("--name", spec.name);
  synth->add_option("--classes", spec.num_classes);
  synth->add_option("--nodes-per-class", spec.nodes_per_class);
  synth->add_option("--p-in", spec.p_in);
  synth->add_option("--p-out", spec.p_out);
  synth->add_option("--features", spec.feature_dim);
  synth->add_option("--signal", spec.feature_signal);
  synth->add_option("--noise", spec.feature_noise);
  synth->add_option("--seed", spec.seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(ra);
    if (*sign) return cmd_build_signed(sa);
    if (*embed) return cmd_embed(ea);
    if (*synth) {
      write_dataset(make_synthetic_dataset(spec), synth_out);
      std::cout << "wrote " << synth_out << '\n';
      return 0;
    }
  } catch (const DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
