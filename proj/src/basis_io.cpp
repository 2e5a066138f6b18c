#include "rbgreedy/basis_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "rbgreedy/errors.hpp"

namespace rbg {
namespace {

constexpr char kMagic[8] = {'R', 'B', 'G', 'B', 'A', 'S', 'I', 'S'};

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b) : b_(b) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > b_.size()) {
      throw BasisLoadError(BasisLoadError::Kind::Truncated, "basis file is truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void save_basis(const ReducedBasis& rb, const std::filesystem::path& path) {
  if (!rb.op()) throw InvalidArgument("save_basis: basis has no operator");
  const auto& op = *rb.op();
  const std::size_t d = op.dim(), n = rb.size(), nh = rb.num_dofs();
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kBasisFormatVersion);
  w.u64(0);  // total length, patched below
  w.u64(d);
  w.u64(n);
  w.u64(nh);
  w.i64(op.mesh->grid_n);
  w.i64(op.model.k);
  w.f64(op.model.decay_t);
  w.f64(op.model.delta);
  w.f64(op.model.abar);
  w.u32(static_cast<std::uint32_t>(op.load_spec.kind));
  w.f64(op.load_spec.value);
  for (double a : op.model.amplitudes) w.f64(a);
  for (const auto& b : rb.vectors())
    for (Eigen::Index i = 0; i < b.size(); ++i) w.f64(b[i]);
  auto dense = [&](const DenseMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
  };
  dense(rb.reduced_a0());
  for (const auto& m : rb.reduced_components()) dense(m);
  for (Eigen::Index i = 0; i < rb.reduced_load().size(); ++i) w.f64(rb.reduced_load()[i]);
  for (const auto& y : rb.provenance())
    for (double v : y.values()) w.f64(v);

  auto& bytes = w.bytes();
  const std::uint64_t total = bytes.size() + 4;
  for (int i = 0; i < 8; ++i) bytes[12 + i] = static_cast<unsigned char>(total >> (8 * i));
  w.u32(crc_of(bytes.data(), bytes.size()));

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw std::runtime_error("failed writing basis file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ReducedBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BasisLoadError(BasisLoadError::Kind::Io, "cannot open basis file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kMagic + 12) {
    throw BasisLoadError(BasisLoadError::Kind::Truncated, "basis file is truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw BasisLoadError(BasisLoadError::Kind::BadMagic, "not a reduced basis file");
  }
  Reader r(bytes);
  r.u64();  // magic
  const std::uint32_t version = r.u32();
  if (version != kBasisFormatVersion) {
    throw BasisLoadError(BasisLoadError::Kind::VersionMismatch,
                         "basis format version " + std::to_string(version) + ", expected " +
                             std::to_string(kBasisFormatVersion));
  }
  const std::uint64_t total = r.u64();
  if (bytes.size() < total) throw BasisLoadError(BasisLoadError::Kind::Truncated, "basis file is truncated");
  if (bytes.size() != total) {
    throw BasisLoadError(BasisLoadError::Kind::ChecksumMismatch, "basis file length does not match its header");
  }
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[total - 4 + i]) << (8 * i);
  if (crc_of(bytes.data(), total - 4) != stored) {
    throw BasisLoadError(BasisLoadError::Kind::ChecksumMismatch, "basis file checksum mismatch");
  }

  const std::uint64_t d = r.u64(), n = r.u64(), nh = r.u64();
  const std::int64_t grid_n = r.i64(), k = r.i64();
  AffineCoefficientModel model;
  model.k = static_cast<int>(k);
  model.decay_t = r.f64();
  model.delta = r.f64();
  model.abar = r.f64();
  LoadSpec load_spec;
  const std::uint32_t load_kind = r.u32();
  if (load_kind > 1) throw BasisLoadError(BasisLoadError::Kind::ChecksumMismatch, "unknown load kind");
  load_spec.kind = static_cast<LoadSpec::Kind>(load_kind);
  load_spec.value = r.f64();
  model.amplitudes.resize(d);
  for (auto& a : model.amplitudes) a = r.f64();

  auto op = std::make_shared<const AffineOperator>(
      assemble(build_mesh(static_cast<int>(grid_n), static_cast<int>(k)), model, load_spec));
  if (op->num_dofs() != nh) {
    throw BasisLoadError(BasisLoadError::Kind::ChecksumMismatch, "stored unknown count does not match the mesh");
  }
  std::vector<Vector> basis(n, Vector(static_cast<Eigen::Index>(nh)));
  for (auto& b : basis)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = r.f64();
  auto dense = [&]() {
    DenseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
    return m;
  };
  DenseMatrix a0 = dense();
  std::vector<DenseMatrix> comps;
  for (std::uint64_t j = 0; j < d; ++j) comps.push_back(dense());
  Vector load(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < load.size(); ++i) load[i] = r.f64();
  std::vector<ParameterVector> prov;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<double> y(d);
    for (auto& v : y) v = r.f64();
    prov.emplace_back(std::move(y));
  }
  if (r.pos() != total - 4) {
    throw BasisLoadError(BasisLoadError::Kind::Truncated, "basis payload size does not match its header");
  }
  return ReducedBasis::from_parts(std::move(op), std::move(basis), std::move(a0), std::move(comps),
                                  std::move(load), std::move(prov));
}

}  // namespace rbg
