#pragma once

// Flat binary parameter checkpoints:
//   magic "DCKPT1" | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 extents... | f64 data...
// All integers and floats little-endian.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "probcast/autodiff.hpp"
#include "probcast/errors.hpp"
#include "probcast/tensor.hpp"

namespace probcast {

namespace detail {

static_assert(sizeof(double) == 8, "checkpoint format assumes 64-bit doubles");

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw data_error("checkpoint: truncated file");
  return v;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[6] = {'D', 'C', 'K', 'P', 'T', '1'};

inline void save_checkpoint(const std::string& path, const std::vector<Parameter>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("checkpoint: cannot open " + path + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_raw(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::write_raw(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::write_raw(os, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t e : p.tensor.shape) detail::write_raw(os, static_cast<std::uint64_t>(e));
    os.write(reinterpret_cast<const char*>(p.tensor.data.data()),
             static_cast<std::streamsize>(p.tensor.data.size() * sizeof(double)));
  }
  if (!os) throw data_error("checkpoint: write failed for " + path);
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("checkpoint: cannot open " + path);
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kCheckpointMagic, 6) != 0)
    throw data_error("checkpoint: bad magic in " + path);
  const auto count = detail::read_raw<std::uint32_t>(is);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_raw<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rank = detail::read_raw<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(detail::read_raw<std::uint64_t>(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw data_error("checkpoint: truncated tensor data in " + path);
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

// Restore values into existing parameters, matching by name; throws if a
// parameter is missing or has a different shape.
inline void restore_checkpoint(const std::string& path, std::vector<Parameter>& params) {
  auto loaded = load_checkpoint(path);
  for (auto& p : params) {
    bool found = false;
    for (auto& nt : loaded) {
      if (nt.name == p.name) {
        if (nt.tensor.shape != p.tensor.shape)
          throw data_error("checkpoint: shape mismatch for " + p.name);
        p.tensor.data = nt.tensor.data;
        found = true;
        break;
      }
    }
    if (!found) throw data_error("checkpoint: missing tensor " + p.name);
  }
}

}  // namespace probcast
