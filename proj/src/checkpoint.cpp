#include "np2l/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <stdexcept>

namespace np2l {

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : params) {
    if (p.name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("checkpoint: tensor name contains whitespace: " + p.name);
    const Matrix& m = p.tensor.value();
    out << p.name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) out << (i ? " " : "") << m[i];
    out << '\n';
  }
}

std::vector<StoredTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<StoredTensor> out;
  std::string name;
  std::size_t rows = 0, cols = 0;
  while (in >> name >> rows >> cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(in >> m[i])) throw std::runtime_error(path.string() + ": truncated tensor " + name);
    out.push_back({name, std::move(m)});
  }
  if (!in.eof()) throw std::runtime_error(path.string() + ": malformed record after " + name);
  return out;
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& params) {
  std::map<std::string, Matrix> stored;
  for (auto& t : read_checkpoint(path)) stored[t.name] = std::move(t.value);
  for (const auto& p : params) {
    const auto it = stored.find(p.name);
    if (it == stored.end()) throw std::runtime_error("checkpoint has no tensor " + p.name);
    ad::Tensor t = p.tensor;
    if (!it->second.same_shape(t.value()))
      throw std::runtime_error("checkpoint tensor " + p.name + " is " +
                               shape_string(it->second.rows(), it->second.cols()) + ", parameter is " +
                               shape_string(t.rows(), t.cols()));
    t.mutable_value() = it->second;
  }
}

}  // namespace np2l
