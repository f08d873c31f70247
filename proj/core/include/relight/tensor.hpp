#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "relight/common.hpp"

namespace relight::nn {

/// Dense shape of rank <= 4. Feature maps are CHW; kernels are
/// (out, in, kh, kw); vectors rank 1; scalars rank 0.
struct Shape {
  std::array<int, 4> d{1, 1, 1, 1};
  int rank = 0;

  static Shape scalar() { return {}; }
  static Shape vec(int n) { return {{n, 1, 1, 1}, 1}; }
  static Shape mat(int r, int c) { return {{r, c, 1, 1}, 2}; }
  static Shape chw(int c, int h, int w) { return {{c, h, w, 1}, 3}; }
  static Shape conv(int co, int ci, int kh, int kw) { return {{co, ci, kh, kw}, 4}; }

  int64_t numel() const {
    int64_t n = 1;
    for (int i = 0; i < rank; ++i) n *= d[i];
    return n;
  }
  bool operator==(const Shape& o) const { return rank == o.rank && d == o.d; }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < rank; ++i) s += (i ? "," : "") + std::to_string(d[i]);
    return s + ")";
  }
};

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(const Shape& s) : shape(s), v(static_cast<size_t>(s.numel()), T(0)) {}
  Tensor(const Shape& s, T fill) : shape(s), v(static_cast<size_t>(s.numel()), fill) {}

  static Tensor scalar(T x) {
    Tensor t(Shape::scalar());
    t.v[0] = x;
    return t;
  }

  int64_t numel() const { return shape.numel(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  // CHW accessors.
  T& at(int c, int y, int x) {
    return v[(static_cast<size_t>(c) * shape.d[1] + y) * shape.d[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return v[(static_cast<size_t>(c) * shape.d[1] + y) * shape.d[2] + x];
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }

  bool all_finite() const {
    for (T x : v) {
      if (!std::isfinite(static_cast<double>(x))) return false;
    }
    return true;
  }
};

}  // namespace relight::nn
