#include "hgr/tensor_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace hgr {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& file) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    fail(ErrorKind::ParseError, file.string() + ": truncated archive");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::uint64_t{1}, std::multiplies<>());
}

}  // namespace

Tensor Tensor::scalar(std::string name, double v) { return {std::move(name), {}, {v}}; }

Tensor Tensor::from_vector(std::string name, const Vector& v) {
  return {std::move(name), {static_cast<std::uint64_t>(v.size())},
          std::vector<double>(v.data(), v.data() + v.size())};
}

Tensor Tensor::from_matrix(std::string name, const Matrix& m) {
  Tensor t{std::move(name), {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, {}};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.data.push_back(m(i, j));
  }
  return t;
}

Vector Tensor::to_vector() const {
  require(dims.size() == 1, ErrorKind::ConfigError, "tensor '" + name + "' is not rank 1");
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

Matrix Tensor::to_matrix() const {
  require(dims.size() == 2, ErrorKind::ConfigError, "tensor '" + name + "' is not rank 2");
  const auto rows = static_cast<Eigen::Index>(dims[0]);
  const auto cols = static_cast<Eigen::Index>(dims[1]);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[static_cast<std::size_t>(i * cols + j)];
  }
  return m;
}

double Tensor::to_scalar() const {
  require(dims.empty() && data.size() == 1, ErrorKind::ConfigError,
          "tensor '" + name + "' is not a scalar");
  return data[0];
}

void TensorArchive::add(Tensor t) {
  require(element_count(t.dims) == t.data.size(), ErrorKind::InvalidInput,
          "tensor '" + t.name + "' payload does not match its dims");
  require(!contains(t.name), ErrorKind::InvalidInput, "duplicate tensor '" + t.name + "'");
  tensors_.push_back(std::move(t));
}

bool TensorArchive::contains(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

const Tensor& TensorArchive::get(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  fail(ErrorKind::ConfigError, "archive has no tensor '" + name + "'");
}

void TensorArchive::save(const std::filesystem::path& file, const ArchiveMagic& magic) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + file.string());
  out.write(magic.data(), magic.size());
  put<std::uint32_t>(out, kArchiveVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto& t : tensors_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    for (double v : t.data) put<double>(out, v);
  }
  if (!out) fail(ErrorKind::ConfigError, "failed writing " + file.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& file, const ArchiveMagic& magic) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open " + file.string());
  ArchiveMagic got{};
  if (!in.read(got.data(), got.size()) || got != magic) {
    fail(ErrorKind::ParseError, file.string() + ": bad magic bytes");
  }
  const auto version = take<std::uint32_t>(in, file);
  if (version != kArchiveVersion) {
    fail(ErrorKind::ParseError, file.string() + ": unsupported format version " + std::to_string(version));
  }
  const auto count = take<std::uint32_t>(in, file);
  TensorArchive archive;
  for (std::uint32_t k = 0; k < count; ++k) {
    Tensor t;
    const auto name_len = take<std::uint32_t>(in, file);
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len)) fail(ErrorKind::ParseError, file.string() + ": truncated name");
    const auto rank = take<std::uint32_t>(in, file);
    if (rank > 8) fail(ErrorKind::ParseError, file.string() + ": implausible tensor rank");
    for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(take<std::uint64_t>(in, file));
    const auto n = element_count(t.dims);
    t.data.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) t.data[i] = take<double>(in, file);
    archive.add(std::move(t));
  }
  return archive;
}

}  // namespace hgr
