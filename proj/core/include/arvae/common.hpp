#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace arvae {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class A, class... Rest>
void format_into(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  format_into(os, rest...);
}
}  // namespace detail

template <class... Args>
[[noreturn]] void fail(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  throw Error(os.str());
}

template <class... Args>
void require(bool cond, const Args&... args) {
  if (!cond) fail(args...);
}

// Dense tensor extents, rank 1..4, row-major with dims[0] outermost.
struct Shape {
  std::array<int, 4> d{1, 1, 1, 1};
  int rank = 0;

  Shape() = default;
  Shape(std::initializer_list<int> dims) {
    require(dims.size() >= 1 && dims.size() <= 4, "shape rank must be 1..4");
    rank = static_cast<int>(dims.size());
    int i = 0;
    for (int v : dims) d[i++] = v;
  }

  int operator[](int i) const { return d[i]; }
  int& operator[](int i) { return d[i]; }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int i = 0; i < rank; ++i) n *= static_cast<std::size_t>(d[i]);
    return rank == 0 ? 0 : n;
  }

  bool operator==(const Shape& o) const {
    if (rank != o.rank) return false;
    for (int i = 0; i < rank; ++i)
      if (d[i] != o.d[i]) return false;
    return true;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < rank; ++i) os << (i ? "," : "") << d[i];
    os << ')';
    return os.str();
  }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) {
  return os << s.str();
}

}  // namespace arvae
