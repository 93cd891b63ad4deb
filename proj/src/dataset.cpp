#include "np2l/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "np2l/rng.hpp"

namespace np2l {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T parse_number(std::string_view tok, const fs::path& file, std::size_t line) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && (*first == ' ' || *first == '\t' || *first == '\r')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DatasetError(file.string() + ":" + std::to_string(line) + ": bad number '" +
                       std::string(tok) + "'");
  }
  return value;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line, line_no);
    pos = end + 1;
  }
}

fs::path resolve_dir(const fs::path& root, const std::string& name) {
  if (fs::is_directory(root / name)) return root / name;
  return root;
}

}  // namespace

DatasetManifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) throw DatasetError("missing " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.name = j.value("name", dir.filename().string());
    m.n = j.at("n").get<std::size_t>();
    m.m = j.at("m").get<std::size_t>();
    m.num_classes = j.at("num_classes").get<int>();
    if (j.contains("directed_edges")) m.directed_edges = j.at("directed_edges").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
  return m;
}

bool dataset_available(const fs::path& root, const std::string& name) {
  if (fs::exists(root / name / "manifest.json")) return true;
  if (!fs::exists(root / "manifest.json")) return false;
  try {
    return read_manifest(root).name == name;
  } catch (const DatasetError&) {
    return false;
  }
}

Dataset load_dataset(const fs::path& root, const std::string& name) {
  const auto dir = resolve_dir(root, name);
  Dataset ds = load_dataset_dir(dir);
  if (dir == root && ds.name != name) {
    throw DatasetError("dataset '" + name + "' not found under " + root.string());
  }
  return ds;
}

Dataset load_dataset_dir(const fs::path& dir) {
  const DatasetManifest man = read_manifest(dir);
  for (const char* f : {"edges.tsv", "features.csv", "labels.txt"})
    if (!fs::exists(dir / f)) throw DatasetError("missing " + (dir / f).string());

  Dataset ds;
  ds.name = man.name;

  // edges
  std::vector<NodePair> edges;
  {
    const auto path = dir / "edges.tsv";
    const std::string text = read_file(path);
    for_each_line(text, [&](std::string_view line, std::size_t no) {
      const auto sep = line.find_first_of(" \t,");
      if (sep == std::string_view::npos)
        throw DatasetError(path.string() + ":" + std::to_string(no) + ": expected two columns");
      const auto a = parse_number<long long>(line.substr(0, sep), path, no);
      const auto b = parse_number<long long>(line.substr(sep + 1), path, no);
      if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= man.n ||
          static_cast<std::size_t>(b) >= man.n) {
        throw DatasetError(path.string() + ":" + std::to_string(no) + ": edge (" +
                           std::to_string(a) + "," + std::to_string(b) +
                           ") outside n=" + std::to_string(man.n));
      }
      edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    });
  }
  ds.graph = Graph(man.n, std::move(edges));
  if (man.directed_edges && *man.directed_edges != ds.graph.num_directed_entries()) {
    throw DatasetError(dir.string() + ": manifest lists " + std::to_string(*man.directed_edges) +
                       " directed edges, file yields " +
                       std::to_string(ds.graph.num_directed_entries()));
  }

  // features
  {
    const auto path = dir / "features.csv";
    const std::string text = read_file(path);
    std::vector<Triplet> t;
    std::size_t row = 0;
    for_each_line(text, [&](std::string_view line, std::size_t no) {
      if (row >= man.n) throw DatasetError(path.string() + ": more than n=" + std::to_string(man.n) + " rows");
      std::size_t col = 0;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        std::size_t end = line.find(',', pos);
        if (end == std::string_view::npos) end = line.size();
        const double v = parse_number<double>(line.substr(pos, end - pos), path, no);
        if (!std::isfinite(v)) throw DatasetError(path.string() + ":" + std::to_string(no) + ": non-finite feature");
        if (col >= man.m)
          throw DatasetError(path.string() + ":" + std::to_string(no) + ": more than m=" + std::to_string(man.m) + " columns");
        if (v != 0.0) t.push_back({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col), v});
        ++col;
        pos = end + 1;
      }
      if (col != man.m) {
        throw DatasetError(path.string() + ":" + std::to_string(no) + ": expected " +
                           std::to_string(man.m) + " columns, got " + std::to_string(col));
      }
      ++row;
    });
    if (row != man.n) {
      throw DatasetError(path.string() + ": expected " + std::to_string(man.n) + " rows, got " +
                         std::to_string(row));
    }
    ds.features.x = SparseMatrix::from_triplets(man.n, man.m, std::move(t));
  }

  // labels
  {
    const auto path = dir / "labels.txt";
    const std::string text = read_file(path);
    ds.labels.num_classes = man.num_classes;
    for_each_line(text, [&](std::string_view line, std::size_t no) {
      ds.labels.y.push_back(parse_number<int>(line, path, no));
    });
    if (ds.labels.y.size() != man.n) {
      throw DatasetError(path.string() + ": expected " + std::to_string(man.n) + " labels, got " +
                         std::to_string(ds.labels.y.size()));
    }
    try {
      ds.labels.validate();
    } catch (const std::invalid_argument& e) {
      throw DatasetError(path.string() + ": " + e.what());
    }
  }
  return ds;
}

void write_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    for (const auto& e : ds.graph.edges()) out << e.u << '\t' << e.v << '\n';
  }
  {
    std::ofstream out(dir / "features.csv");
    out << std::setprecision(17);
    const std::size_t m = ds.features.cols();
    std::vector<double> row(m);
    for (std::size_t r = 0; r < ds.features.rows(); ++r) {
      std::fill(row.begin(), row.end(), 0.0);
      const auto cols = ds.features.x.row_cols(r);
      const auto vals = ds.features.x.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) row[cols[k]] = vals[k];
      for (std::size_t c = 0; c < m; ++c) {
        if (c) out << ',';
        out << row[c];
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (int y : ds.labels.y) out << y << '\n';
  }
  {
    nlohmann::json j{{"name", ds.name},
                     {"n", ds.graph.num_nodes()},
                     {"m", ds.features.cols()},
                     {"num_classes", ds.labels.num_classes},
                     {"directed_edges", ds.graph.num_directed_entries()}};
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << '\n';
  }
}

Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.num_classes <= 0 || spec.nodes_per_class == 0)
    throw std::invalid_argument("make_synthetic_dataset: empty spec");
  Rng rng(spec.seed);
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  const std::size_t n = k * spec.nodes_per_class;

  Dataset ds;
  ds.name = spec.name;
  ds.labels.num_classes = spec.num_classes;
  ds.labels.y.resize(n);
  for (std::size_t v = 0; v < n; ++v) ds.labels.y[v] = static_cast<int>(v % k);

  std::vector<NodePair> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = ds.labels.y[u] == ds.labels.y[v] ? spec.p_in : spec.p_out;
      if (rng.uniform() < p) edges.push_back({u, v});
    }
  ds.graph = Graph(n, std::move(edges));

  std::vector<Triplet> t;
  const std::size_t block = std::max<std::size_t>(1, spec.feature_dim / k);
  for (std::uint32_t v = 0; v < n; ++v) {
    const std::size_t c = static_cast<std::size_t>(ds.labels.y[v]);
    for (std::uint32_t f = 0; f < spec.feature_dim; ++f) {
      const bool indicative = f / block == c;
      const double p = indicative ? spec.feature_signal : spec.feature_noise;
      if (rng.uniform() < p) t.push_back({v, f, 1.0});
    }
  }
  ds.features.x = SparseMatrix::from_triplets(n, spec.feature_dim, std::move(t));
  return ds;
}

}  // namespace np2l
