#include "qnav/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace qnav {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace {

constexpr char kMagic[4] = {'Q', 'N', 'A', 'V'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kMaxDim = 1 << 20;  // sanity bound for corrupt files

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const RowMajorMatrix row_major = m;
  write_bytes(out, row_major.data(), sizeof(double) * row_major.size());
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  write_bytes(out, v.data(), sizeof(double) * v.size());
}

void read_bytes(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error("checkpoint truncated: unexpected end of file");
  }
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  read_bytes(in, &value, sizeof(T));
  return value;
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint32_t>(in);
  if (len > (1u << 24)) {
    throw std::runtime_error("checkpoint truncated: implausible string size");
  }
  std::string s(len, '\0');
  read_bytes(in, s.data(), len);
  return s;
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
  RowMajorMatrix row_major(m.rows(), m.cols());
  read_bytes(in, row_major.data(), sizeof(double) * row_major.size());
  m = row_major;
}

void read_vector(std::istream& in, Eigen::VectorXd& v) {
  read_bytes(in, v.data(), sizeof(double) * v.size());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Mlp& net,
                     const AdamState& adam, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open checkpoint for writing: " +
                             path.string());
  }
  write_bytes(out, kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kFormatVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [key, value] : meta) {
    write_string(out, key);
    write_string(out, value);
  }
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.dims.size()));
  for (int d : net.dims) write_pod<std::uint32_t>(out, std::uint32_t(d));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    write_matrix(out, net.weights[l]);
    write_vector(out, net.biases[l]);
  }
  write_pod<std::int64_t>(out, adam.step);
  write_pod<double>(out, adam.learning_rate);
  write_pod<double>(out, adam.beta1);
  write_pod<double>(out, adam.beta2);
  write_pod<double>(out, adam.epsilon);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    write_matrix(out, adam.m_weights[l]);
    write_matrix(out, adam.v_weights[l]);
    write_vector(out, adam.m_biases[l]);
    write_vector(out, adam.v_biases[l]);
  }
  if (!out) {
    throw std::runtime_error("checkpoint write failed: " + path.string());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::span<const int>> expected_dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open checkpoint: " + path.string());
  }
  char magic[4];
  read_bytes(in, magic, sizeof(magic));
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw std::runtime_error("checkpoint format error: bad magic in " +
                             path.string());
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw std::runtime_error(
        "checkpoint version mismatch: file has version " +
        std::to_string(version) + ", this build reads version " +
        std::to_string(kFormatVersion));
  }
  CheckpointMeta meta;
  const auto meta_count = read_pod<std::uint32_t>(in);
  if (meta_count > (1u << 16)) {
    throw std::runtime_error("checkpoint truncated: implausible meta count");
  }
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = read_string(in);
    meta[std::move(key)] = read_string(in);
  }
  const auto dim_count = read_pod<std::uint32_t>(in);
  if (dim_count < 2 || dim_count > 64) {
    throw std::runtime_error("checkpoint truncated: implausible layer count");
  }
  std::vector<int> dims(dim_count);
  for (auto& d : dims) {
    const auto v = read_pod<std::uint32_t>(in);
    if (v == 0 || v > kMaxDim) {
      throw std::runtime_error("checkpoint truncated: implausible layer dim");
    }
    d = static_cast<int>(v);
  }
  if (expected_dims &&
      !std::equal(dims.begin(), dims.end(), expected_dims->begin(),
                  expected_dims->end())) {
    std::string have, want;
    for (int d : dims) have += std::to_string(d) + " ";
    for (int d : *expected_dims) want += std::to_string(d) + " ";
    throw std::runtime_error("checkpoint dimension mismatch: file has [ " +
                             have + "], expected [ " + want + "]");
  }
  Checkpoint ckpt{Mlp(dims), AdamState(Mlp(dims)), std::move(meta)};
  for (std::size_t l = 0; l < ckpt.net.layer_count(); ++l) {
    read_matrix(in, ckpt.net.weights[l]);
    read_vector(in, ckpt.net.biases[l]);
  }
  ckpt.adam.step = read_pod<std::int64_t>(in);
  ckpt.adam.learning_rate = read_pod<double>(in);
  ckpt.adam.beta1 = read_pod<double>(in);
  ckpt.adam.beta2 = read_pod<double>(in);
  ckpt.adam.epsilon = read_pod<double>(in);
  for (std::size_t l = 0; l < ckpt.net.layer_count(); ++l) {
    read_matrix(in, ckpt.adam.m_weights[l]);
    read_matrix(in, ckpt.adam.v_weights[l]);
    read_vector(in, ckpt.adam.m_biases[l]);
    read_vector(in, ckpt.adam.v_biases[l]);
  }
  return ckpt;
}

}  // namespace qnav
