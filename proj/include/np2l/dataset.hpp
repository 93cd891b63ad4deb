#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "np2l/graph.hpp"

namespace np2l {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetManifest {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  int num_classes = 0;
  /// Directed adjacency entries after symmetrization, when the manifest lists it.
  std::optional<std::size_t> directed_edges;
};

struct Dataset {
  std::string name;
  Graph graph;
  FeatureMatrix features;
  LabelVector labels;
};

/// On-disk layout of one dataset directory:
///   edges.tsv      two 0-based integer columns per line (directed input is symmetrized)
///   features.csv   n rows of m comma-separated reals
///   labels.txt     n integers, one per line
///   manifest.json  {"name", "n", "m", "num_classes", optional "directed_edges"}
///
/// load_dataset(root, name) reads root/name/ when it exists, else root/ itself.
/// Throws DatasetError on missing files, out-of-range ids or shape mismatches.
Dataset load_dataset(const std::filesystem::path& root, const std::string& name);
Dataset load_dataset_dir(const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Writes `ds` in the layout above (creating `dir`).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// True when root/name (or root with a matching manifest) holds a dataset.
bool dataset_available(const std::filesystem::path& root, const std::string& name);

struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t nodes_per_class = 40;
  int num_classes = 4;
  double p_in = 0.15;   // edge probability within a class
  double p_out = 0.01;  // edge probability across classes
  std::size_t feature_dim = 32;
  double feature_signal = 0.6;  // probability a class-indicative feature is on
  double feature_noise = 0.05;  // probability any other feature is on
  std::uint64_t seed = 0;
};

/// Contextual stochastic block model with binary bag-of-words style features.
/// Setting p_out > p_in gives a heterophilic graph.
Dataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace np2l
