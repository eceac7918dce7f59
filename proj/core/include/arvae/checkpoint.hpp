#pragma once

#include <cstdio>
#include <fstream>
#include <map>

#include "arvae/nn.hpp"

namespace arvae {

// Checkpoint archive: magic, version, the fully-resolved config (an opaque
// JSON string echoed verbatim), then raw little-endian tensors keyed by
// module path. Loading verifies that names, shapes and scalar width agree
// with the receiving model.

namespace ckpt_detail {

constexpr std::uint32_t kMagic = 0x43565241;  // "ARVC"
constexpr std::uint32_t kVersion = 1;

template <class V>
void write_pod(std::ostream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <class V>
void read_pod(std::istream& is, V& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string read_string(std::istream& is) {
  std::uint32_t n = 0;
  read_pod(is, n);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace ckpt_detail

template <typename T>
void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamRegistry<T>& params) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "checkpoint: cannot open for writing: ", path);
  using namespace ckpt_detail;
  write_pod(os, kMagic);
  write_pod(os, kVersion);
  write_string(os, config_json);
  write_pod(os, static_cast<std::uint32_t>(params.items.size()));
  for (const auto& [name, p] : params.items) {
    write_string(os, name);
    write_pod(os, static_cast<std::uint8_t>(sizeof(T)));
    write_pod(os, static_cast<std::uint8_t>(p->value.rank()));
    for (int i = 0; i < p->value.rank(); ++i)
      write_pod(os, static_cast<std::int32_t>(p->value.dim(i)));
    write_pod(os, static_cast<std::uint64_t>(p->value.size()));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(T)));
  }
  require(os.good(), "checkpoint: write failed: ", path);
}

inline std::string read_checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "checkpoint: cannot open: ", path);
  using namespace ckpt_detail;
  std::uint32_t magic = 0, version = 0;
  read_pod(is, magic);
  read_pod(is, version);
  require(magic == kMagic, "checkpoint: bad magic in ", path);
  require(version == kVersion, "checkpoint: unsupported version ", version);
  return read_string(is);
}

template <typename T>
std::string load_checkpoint(const std::string& path, ParamRegistry<T>& params) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "checkpoint: cannot open: ", path);
  using namespace ckpt_detail;
  std::uint32_t magic = 0, version = 0;
  read_pod(is, magic);
  read_pod(is, version);
  require(magic == kMagic, "checkpoint: bad magic in ", path);
  require(version == kVersion, "checkpoint: unsupported version ", version);
  std::string config = read_string(is);

  std::map<std::string, Param<T>*> wanted;
  for (auto& [name, p] : params.items) wanted[name] = p;

  std::uint32_t count = 0;
  read_pod(is, count);
  std::size_t matched = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(is);
    std::uint8_t width = 0, rank = 0;
    read_pod(is, width);
    read_pod(is, rank);
    Shape shape;
    shape.rank = rank;
    for (int d = 0; d < rank; ++d) {
      std::int32_t v = 0;
      read_pod(is, v);
      shape[d] = v;
    }
    std::uint64_t numel = 0;
    read_pod(is, numel);
    require(width == sizeof(T), "checkpoint: scalar width ", int(width),
            " does not match model (", sizeof(T), ") for ", name);
    auto it = wanted.find(name);
    require(it != wanted.end(), "checkpoint: unexpected tensor ", name);
    require(it->second->value.shape() == shape, "checkpoint: shape ", shape.str(),
            " does not match model ", it->second->value.shape().str(), " for ", name);
    require(numel == it->second->value.size(), "checkpoint: element count for ", name);
    is.read(reinterpret_cast<char*>(it->second->value.data()),
            static_cast<std::streamsize>(numel * sizeof(T)));
    ++matched;
  }
  require(is.good(), "checkpoint: truncated file ", path);
  require(matched == wanted.size(), "checkpoint: ", path, " holds ", matched,
          " of ", wanted.size(), " model tensors");
  return config;
}

}  // namespace arvae
