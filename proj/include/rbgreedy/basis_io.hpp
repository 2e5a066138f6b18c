#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "rbgreedy/greedy.hpp"

namespace rbg {

// Binary basis container, all integers and floats little-endian:
//   "RBGBASIS" | u32 version | u64 total_bytes | u64 d | u64 n | u64 n_h
//   | i64 grid_n | i64 k | f64 t | f64 delta | f64 abar | u32 load_kind | f64 load_value
//   | f64[d] amplitudes | f64[n*n_h] basis | f64[n*n] A0_n | f64[d*n*n] A_j,n
//   | f64[n] f_n | f64[n*d] provenance | u32 crc32(all preceding bytes)

constexpr std::uint32_t kBasisFormatVersion = 1;

class BasisLoadError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Io };
  BasisLoadError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Writes through a temporary file and renames it into place.
void save_basis(const ReducedBasis& rb, const std::filesystem::path& path);
/// Re-assembles the high-fidelity operator from the stored model description.
ReducedBasis load_basis(const std::filesystem::path& path);

}  // namespace rbg
