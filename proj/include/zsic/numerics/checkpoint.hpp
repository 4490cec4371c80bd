#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "zsic/errors.hpp"
#include "zsic/numerics/matrix.hpp"
#include "zsic/numerics/param_store.hpp"

namespace zsic {

/// Named-tensor container.
///
/// Layout (all integers little-endian):
///   "ZSCK" | u8 version | u32 header_len | header bytes (UTF-8 text)
///   u32 tensor_count | per tensor: u32 name_len | name | u64 rows | u64 cols | rows*cols f64
struct Checkpoint {
  static constexpr std::uint8_t kVersion = 1;
  static constexpr char kMagic[4] = {'Z', 'S', 'C', 'K'};

  struct Tensor {
    std::string name;
    Matrix value;
    friend bool operator==(const Tensor&, const Tensor&) = default;
  };

  std::string header;
  std::vector<Tensor> tensors;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

  const Matrix* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t.value;
    return nullptr;
  }

  static Checkpoint from_store(const ParamStore& store, std::string header) {
    Checkpoint ck;
    ck.header = std::move(header);
    for (const auto& e : store.entries()) ck.tensors.push_back({e.name, e.value});
    return ck;
  }

  /// Copies every stored tensor into the matching store entry. Shapes and the
  /// name set must match exactly.
  void load_into(ParamStore& store) const {
    if (tensors.size() < store.size()) throw FormatError("checkpoint: missing parameters");
    for (auto& e : store.entries()) {
      const Matrix* m = find(e.name);
      if (!m) throw FormatError("checkpoint: parameter '" + e.name + "' not found");
      if (!m->same_shape(e.value)) throw FormatError("checkpoint: parameter '" + e.name + "' has wrong shape");
      e.value = *m;
    }
  }

  void write(std::ostream& os) const {
    os.write(kMagic, 4);
    put<std::uint8_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
      put<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
      os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
      put<std::uint64_t>(os, t.value.rows());
      put<std::uint64_t>(os, t.value.cols());
      for (double v : t.value.values()) put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw DataError("checkpoint: write failed");
  }

  static Checkpoint read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
    const auto version = get<std::uint8_t>(is);
    if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint ck;
    ck.header = get_string(is, get<std::uint32_t>(is));
    const auto count = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < count; ++i) {
      Tensor t;
      t.name = get_string(is, get<std::uint32_t>(is));
      const auto rows = get<std::uint64_t>(is);
      const auto cols = get<std::uint64_t>(is);
      if (rows > (1u << 24) || cols > (1u << 24)) throw FormatError("checkpoint: implausible tensor shape");
      t.value = Matrix(rows, cols);
      for (double& v : t.value.values()) v = std::bit_cast<double>(get<std::uint64_t>(is));
      ck.tensors.push_back(std::move(t));
    }
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    write(os);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
    return read(is);
  }

 private:
  template <class T>
  static void put(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
  }

  template <class T>
  static T get(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw FormatError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
  }

  static std::string get_string(std::istream& is, std::uint32_t n) {
    if (n > (1u << 26)) throw FormatError("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw FormatError("checkpoint: truncated file");
    return s;
  }
};

}  // namespace zsic
