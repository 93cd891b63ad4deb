#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "np2l/encoders.hpp"

namespace np2l {

struct StoredTensor {
  std::string name;
  Matrix value;
};

/// Flat text file, one tensor per record:
///   <name> <rows> <cols>
///   <rows * cols row-major values>
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& params);

std::vector<StoredTensor> read_checkpoint(const std::filesystem::path& path);

/// Copies stored values into matching parameters by name. Throws
/// std::runtime_error on a missing name or a shape mismatch.
void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& params);

}  // namespace np2l
