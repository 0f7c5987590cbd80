#pragma once

// Versioned little-endian container of named float64 tensors, used for
// network checkpoints and SVM models. Byte layout in docs/formats.md.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgr/symmat.hpp"

namespace hgr {

inline constexpr std::uint32_t kArchiveVersion = 1;
using ArchiveMagic = std::array<char, 8>;

inline constexpr ArchiveMagic kCheckpointMagic = {'H', 'G', 'R', 'N', 'E', 'T', 'C', 'K'};
inline constexpr ArchiveMagic kSvmModelMagic = {'H', 'G', 'R', 'S', 'V', 'M', 'M', 'D'};

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;  // row-major

  static Tensor scalar(std::string name, double v);
  static Tensor from_vector(std::string name, const Vector& v);
  static Tensor from_matrix(std::string name, const Matrix& m);

  Vector to_vector() const;
  Matrix to_matrix() const;
  double to_scalar() const;
};

class TensorArchive {
 public:
  void add(Tensor t);
  bool contains(const std::string& name) const;
  /// Throws ConfigError when absent.
  const Tensor& get(const std::string& name) const;
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void save(const std::filesystem::path& file, const ArchiveMagic& magic) const;
  /// Throws ParseError on a bad magic, version or truncated payload.
  static TensorArchive load(const std::filesystem::path& file, const ArchiveMagic& magic);

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace hgr
