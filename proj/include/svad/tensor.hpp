// tensor.hpp — minimal row-major (time, unit) array used throughout the
// toolkit. Spike tensors are Mat<S> whose entries are exactly 0 or 1.
#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace svad {

template <typename S>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<S> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, S(0)) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }

  S& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  const S& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  S* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const S* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return v.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(S x) { std::fill(v.begin(), v.end(), x); }
};

// A spike tensor is a Mat whose values are binary; the alias documents intent.
template <typename S>
using SpikeTensor = Mat<S>;

template <typename S>
inline long popcount(const Mat<S>& m) {
  long n = 0;
  for (S x : m.v) n += (x != S(0)) ? 1 : 0;
  return n;
}

template <typename S>
inline bool is_binary(const Mat<S>& m) {
  for (S x : m.v)
    if (x != S(0) && x != S(1)) return false;
  return true;
}

inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

template <typename A, typename B>
inline void require_eq(A a, B b, const std::string& what) {
  if (!(a == static_cast<A>(b))) {
    std::ostringstream os;
    os << what << " (got " << a << ", expected " << b << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace svad
