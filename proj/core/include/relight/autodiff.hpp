#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relight/colorspace.hpp"
#include "relight/rng.hpp"
#include "relight/tensor.hpp"

// Reverse-mode autodiff over dense tensors. Graphs are built eagerly per
// sample, values computed at op creation, gradients by one backward() sweep.
// Graphs are single-threaded; parameter tensors are shared read-only across
// concurrently built graphs, which is what makes per-sample data parallelism
// safe.

namespace relight::nn {

template <typename T>
struct Node {
  Tensor<T> owned;
  const Tensor<T>* val = nullptr;  // &owned, or an external parameter tensor
  Tensor<T> grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void()> backprop;

  const Tensor<T>& value() const { return *val; }
  Tensor<T>& ensure_grad() {
    if (!grad_ready) {
      grad = Tensor<T>(val->shape);
      grad_ready = true;
    }
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

  const Tensor<T>& value() const { return n_->value(); }
  const Shape& shape() const { return n_->value().shape; }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  Node<T>* node() const { return n_.get(); }
  std::shared_ptr<Node<T>> ptr() const { return n_; }
  explicit operator bool() const { return static_cast<bool>(n_); }

 private:
  std::shared_ptr<Node<T>> n_;
};

/// Named parameter tensors, ordered by name so iteration (init, optimizer
/// steps, serialization) is deterministic.
template <typename T>
struct ParamStore {
  std::map<std::string, Tensor<T>> tensors;

  Tensor<T>& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ValidationError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ValidationError("unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [k, t] : tensors) out.tensors.emplace(k, t.template cast<U>());
    return out;
  }
};

/// Builds leaves over a ParamStore. With track_grads=false the same builder
/// code runs as pure inference: no closures, no input retention.
template <typename T>
class Tape {
 public:
  Tape(const ParamStore<T>& params, bool track_grads)
      : params_(&params), track_(track_grads) {}

  Var<T> param(const std::string& name) {
    auto it = leaves_.find(name);
    if (it != leaves_.end()) return Var<T>(it->second);
    auto node = std::make_shared<Node<T>>();
    node->val = &params_->at(name);
    node->requires_grad = track_;
    leaves_.emplace(name, node);
    return Var<T>(node);
  }

  bool tracking() const { return track_; }

  /// Parameter gradients accumulated by backward(); zero tensors for
  /// parameters that were never touched. Ordered by name.
  std::map<std::string, Tensor<T>> grads() const {
    std::map<std::string, Tensor<T>> out;
    for (const auto& [name, node] : leaves_) {
      out.emplace(name, node->grad_ready ? node->grad : Tensor<T>(node->value().shape));
    }
    return out;
  }

  const std::map<std::string, std::shared_ptr<Node<T>>>& leaves() const { return leaves_; }

 private:
  const ParamStore<T>* params_;
  bool track_;
  std::map<std::string, std::shared_ptr<Node<T>>> leaves_;
};

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
Var<T> make_op(Tensor<T> value, std::initializer_list<Var<T>> ins,
               const std::function<std::function<void()>(Node<T>*)>& make_backprop) {
  auto node = std::make_shared<Node<T>>();
  node->owned = std::move(value);
  node->val = &node->owned;
  for (const Var<T>& v : ins) node->requires_grad |= v.requires_grad();
  if (node->requires_grad) {
    node->inputs.reserve(ins.size());
    for (const Var<T>& v : ins) node->inputs.push_back(v.ptr());
    node->backprop = make_backprop(node.get());
  }
  return Var<T>(node);
}

// col is (C*kh*kw) x (Ho*Wo), row-major.
template <typename T>
void im2col(const Tensor<T>& x, int kh, int kw, int stride, int pad, int ho, int wo,
            T* col) {
  const int c_in = x.shape.d[0], h = x.shape.d[1], w = x.shape.d[2];
  const T* src = x.data();
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* row = col + (static_cast<size_t>(ci) * kh * kw + ky * kw + kx) *
                           (static_cast<size_t>(ho) * wo);
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < wo; ++ox) row[oy * wo + ox] = T(0);
            continue;
          }
          const T* src_row = src + (static_cast<size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[oy * wo + ox] = (ix < 0 || ix >= w) ? T(0) : src_row[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int c_in, int h, int w, int kh, int kw, int stride, int pad,
                int ho, int wo, Tensor<T>& dst) {
  T* out = dst.data();
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = col + (static_cast<size_t>(ci) * kh * kw + ky * kw + kx) *
                                 (static_cast<size_t>(ho) * wo);
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* out_row = out + (static_cast<size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) out_row[ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

template <typename T>
Var<T> make_input(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->owned = std::move(value);
  node->val = &node->owned;
  return Var<T>(node);
}

/// 2D convolution, CHW in, (out,in,kh,kw) kernel, zero padding.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.rank != 3 || ws.rank != 4 || xs.d[0] != ws.d[1]) {
    throw ValidationError("conv2d: shape mismatch " + xs.str() + " vs " + ws.str());
  }
  if (b.shape() != Shape::vec(ws.d[0])) throw ValidationError("conv2d: bad bias shape");
  const int co = ws.d[0], ci = ws.d[1], kh = ws.d[2], kw = ws.d[3];
  const int h = xs.d[1], wd = xs.d[2];
  // Floor convolution arithmetic; with k=3, p=1 this is "same" at stride 1
  // and exact halving at stride 2 for even inputs.
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (wd + 2 * pad - kw) / stride + 1;
  if (ho < 1 || wo < 1) {
    throw ValidationError("conv2d: input smaller than kernel");
  }

  Tensor<T> out(Shape::chw(co, ho, wo));
  {
    Tensor<T> col(Shape::mat(ci * kh * kw, ho * wo));
    detail::im2col(x.value(), kh, kw, stride, pad, ho, wo, col.data());
    detail::ConstMatMap<T> wm(w.value().data(), co, ci * kh * kw);
    detail::ConstMatMap<T> cm(col.data(), ci * kh * kw, ho * wo);
    detail::MatMap<T> om(out.data(), co, ho * wo);
    om.noalias() = wm * cm;
    for (int c = 0; c < co; ++c) om.row(c).array() += b.value().v[c];
  }

  return detail::make_op<T>(
      std::move(out), {x, w, b}, [=](Node<T>* n) {
        return [n, x, w, b, stride, pad, co, ci, kh, kw, h, wd, ho, wo] {
          detail::ConstMatMap<T> dout(n->grad.data(), co, ho * wo);
          if (b.requires_grad()) {
            Tensor<T>& db = b.node()->ensure_grad();
            for (int c = 0; c < co; ++c) db.v[c] += dout.row(c).sum();
          }
          if (w.requires_grad()) {
            Tensor<T> col(Shape::mat(ci * kh * kw, ho * wo));
            detail::im2col(x.value(), kh, kw, stride, pad, ho, wo, col.data());
            detail::ConstMatMap<T> cm(col.data(), ci * kh * kw, ho * wo);
            detail::MatMap<T> dw(w.node()->ensure_grad().data(), co, ci * kh * kw);
            dw.noalias() += dout * cm.transpose();
          }
          if (x.requires_grad()) {
            Tensor<T> dcol(Shape::mat(ci * kh * kw, ho * wo));
            detail::ConstMatMap<T> wm(w.value().data(), co, ci * kh * kw);
            detail::MatMap<T> dc(dcol.data(), ci * kh * kw, ho * wo);
            dc.noalias() = wm.transpose() * dout;
            detail::col2im_add(dcol.data(), ci, h, wd, kh, kw, stride, pad, ho, wo,
                               x.node()->ensure_grad());
          }
        };
      });
}

/// Fully connected layer: y = W x + b.
template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.rank != 1 || ws.rank != 2 || ws.d[1] != xs.d[0]) {
    throw ValidationError("dense: shape mismatch " + xs.str() + " vs " + ws.str());
  }
  if (b.shape() != Shape::vec(ws.d[0])) throw ValidationError("dense: bad bias shape");
  const int m = ws.d[0], nn = ws.d[1];
  Tensor<T> out(Shape::vec(m));
  detail::ConstMatMap<T> wm(w.value().data(), m, nn);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.value().data(), nn);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> ov(out.data(), m);
  ov.noalias() = wm * xv;
  for (int i = 0; i < m; ++i) out.v[i] += b.value().v[i];

  return detail::make_op<T>(std::move(out), {x, w, b}, [=](Node<T>* n) {
    return [n, x, w, b, m, nn] {
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> dy(n->grad.data(), m);
      if (b.requires_grad()) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(b.node()->ensure_grad().data(), m);
        db += dy;
      }
      if (w.requires_grad()) {
        detail::MatMap<T> dw(w.node()->ensure_grad().data(), m, nn);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> xv(x.value().data(), nn);
        dw.noalias() += dy * xv.transpose();
      }
      if (x.requires_grad()) {
        detail::ConstMatMap<T> wm(w.value().data(), m, nn);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dx(x.node()->ensure_grad().data(), nn);
        dx.noalias() += wm.transpose() * dy;
      }
    };
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T alpha) {
  Tensor<T> out = x.value();
  for (T& v : out.v) v = v > T(0) ? v : alpha * v;
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x, alpha] {
      Tensor<T>& dx = x.node()->ensure_grad();
      const auto& xv = x.value().v;
      for (size_t i = 0; i < xv.size(); ++i) {
        dx.v[i] += n->grad.v[i] * (xv[i] > T(0) ? T(1) : alpha);
      }
    };
  });
}

template <typename T>
Var<T> tanh_act(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (T& v : out.v) v = std::tanh(v);
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x] {
      Tensor<T>& dx = x.node()->ensure_grad();
      for (size_t i = 0; i < dx.v.size(); ++i) {
        const T y = n->owned.v[i];
        dx.v[i] += n->grad.v[i] * (T(1) - y * y);
      }
    };
  });
}

template <typename T>
Var<T> sigmoid_act(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (T& v : out.v) v = T(1) / (T(1) + std::exp(-v));
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x] {
      Tensor<T>& dx = x.node()->ensure_grad();
      for (size_t i = 0; i < dx.v.size(); ++i) {
        const T y = n->owned.v[i];
        dx.v[i] += n->grad.v[i] * y * (T(1) - y);
      }
    };
  });
}

/// Nearest-neighbor 2x upsampling of a CHW map.
template <typename T>
Var<T> upsample_nearest2(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank != 3) throw ValidationError("upsample: CHW input required");
  const int c = s.d[0], h = s.d[1], w = s.d[2];
  Tensor<T> out(Shape::chw(c, 2 * h, 2 * w));
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < 2 * h; ++y) {
      const T* src = &x.value().at(ci, y / 2, 0);
      T* dst = &out.at(ci, y, 0);
      for (int xx = 0; xx < 2 * w; ++xx) dst[xx] = src[xx / 2];
    }
  }
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x, c, h, w] {
      Tensor<T>& dx = x.node()->ensure_grad();
      for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < 2 * h; ++y) {
          const T* g = &n->grad.at(ci, y, 0);
          T* d = &dx.at(ci, y / 2, 0);
          for (int xx = 0; xx < 2 * w; ++xx) d[xx / 2] += g[xx];
        }
      }
    };
  });
}

/// Channel concatenation of CHW maps with equal spatial dims.
template <typename T>
Var<T> concat_ch(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ValidationError("concat: no inputs");
  const int h = xs[0].shape().d[1], w = xs[0].shape().d[2];
  int c_total = 0;
  for (const Var<T>& v : xs) {
    if (v.shape().rank != 3 || v.shape().d[1] != h || v.shape().d[2] != w) {
      throw ValidationError("concat: spatial dims disagree");
    }
    c_total += v.shape().d[0];
  }
  Tensor<T> out(Shape::chw(c_total, h, w));
  size_t off = 0;
  for (const Var<T>& v : xs) {
    std::copy(v.value().v.begin(), v.value().v.end(), out.v.begin() + off);
    off += v.value().v.size();
  }

  auto node = std::make_shared<Node<T>>();
  node->owned = std::move(out);
  node->val = &node->owned;
  for (const Var<T>& v : xs) node->requires_grad |= v.requires_grad();
  if (node->requires_grad) {
    for (const Var<T>& v : xs) node->inputs.push_back(v.ptr());
    Node<T>* n = node.get();
    auto parts = xs;
    node->backprop = [n, parts] {
      size_t off = 0;
      for (const Var<T>& v : parts) {
        const size_t len = v.value().v.size();
        if (v.requires_grad()) {
          Tensor<T>& d = v.node()->ensure_grad();
          for (size_t i = 0; i < len; ++i) d.v[i] += n->grad.v[off + i];
        }
        off += len;
      }
    };
  }
  return Var<T>(node);
}

/// Replicates a length-C vector over an HxW grid.
template <typename T>
Var<T> broadcast_vec_chw(const Var<T>& v, int h, int w) {
  if (v.shape().rank != 1) throw ValidationError("broadcast: vector input required");
  const int c = v.shape().d[0];
  Tensor<T> out(Shape::chw(c, h, w));
  for (int ci = 0; ci < c; ++ci) {
    std::fill_n(&out.at(ci, 0, 0), static_cast<size_t>(h) * w, v.value().v[ci]);
  }
  return detail::make_op<T>(std::move(out), {v}, [=](Node<T>* n) {
    return [n, v, c, h, w] {
      Tensor<T>& dv = v.node()->ensure_grad();
      for (int ci = 0; ci < c; ++ci) {
        T acc(0);
        const T* g = &n->grad.at(ci, 0, 0);
        for (int i = 0; i < h * w; ++i) acc += g[i];
        dv.v[ci] += acc;
      }
    };
  });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank != 3) throw ValidationError("gap: CHW input required");
  const int c = s.d[0];
  const int64_t hw = static_cast<int64_t>(s.d[1]) * s.d[2];
  Tensor<T> out(Shape::vec(c));
  for (int ci = 0; ci < c; ++ci) {
    T acc(0);
    const T* p = x.value().data() + ci * hw;
    for (int64_t i = 0; i < hw; ++i) acc += p[i];
    out.v[ci] = acc / T(hw);
  }
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x, c, hw] {
      Tensor<T>& dx = x.node()->ensure_grad();
      for (int ci = 0; ci < c; ++ci) {
        const T g = n->grad.v[ci] / T(hw);
        T* p = dx.data() + ci * hw;
        for (int64_t i = 0; i < hw; ++i) p[i] += g;
      }
    };
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T c) {
  Tensor<T> out = x.value();
  for (T& v : out.v) v += c;
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x] {
      Tensor<T>& dx = x.node()->ensure_grad();
      for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += n->grad.v[i];
    };
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ValidationError("add: shape mismatch");
  Tensor<T> out = a.value();
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.value().v[i];
  return detail::make_op<T>(std::move(out), {a, b}, [=](Node<T>* n) {
    return [n, a, b] {
      for (const Var<T>& in : {a, b}) {
        if (!in.requires_grad()) continue;
        Tensor<T>& d = in.node()->ensure_grad();
        for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += n->grad.v[i];
      }
    };
  });
}

/// Mean absolute difference over all elements.
template <typename T>
Var<T> mean_abs_diff(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ValidationError("l1: shape mismatch");
  const T inv = T(1) / T(a.value().numel());
  T acc(0);
  for (size_t i = 0; i < a.value().v.size(); ++i) {
    acc += std::abs(a.value().v[i] - b.value().v[i]);
  }
  return detail::make_op<T>(Tensor<T>::scalar(acc * inv), {a, b}, [=](Node<T>* n) {
    return [n, a, b, inv] {
      const T g = n->grad.v[0] * inv;
      for (size_t i = 0; i < a.value().v.size(); ++i) {
        const T diff = a.value().v[i] - b.value().v[i];
        const T s = diff > T(0) ? g : (diff < T(0) ? -g : T(0));
        if (a.requires_grad()) a.node()->ensure_grad().v[i] += s;
        if (b.requires_grad()) b.node()->ensure_grad().v[i] -= s;
      }
    };
  });
}

/// Mean squared difference over all elements.
template <typename T>
Var<T> mean_sq_diff(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ValidationError("mse: shape mismatch");
  const T inv = T(1) / T(a.value().numel());
  T acc(0);
  for (size_t i = 0; i < a.value().v.size(); ++i) {
    const T d = a.value().v[i] - b.value().v[i];
    acc += d * d;
  }
  return detail::make_op<T>(Tensor<T>::scalar(acc * inv), {a, b}, [=](Node<T>* n) {
    return [n, a, b, inv] {
      const T g = T(2) * n->grad.v[0] * inv;
      for (size_t i = 0; i < a.value().v.size(); ++i) {
        const T d = g * (a.value().v[i] - b.value().v[i]);
        if (a.requires_grad()) a.node()->ensure_grad().v[i] += d;
        if (b.requires_grad()) b.node()->ensure_grad().v[i] -= d;
      }
    };
  });
}

/// Summed squared difference (squared Euclidean distance).
template <typename T>
Var<T> sum_sq_diff(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ValidationError("l2: shape mismatch");
  T acc(0);
  for (size_t i = 0; i < a.value().v.size(); ++i) {
    const T d = a.value().v[i] - b.value().v[i];
    acc += d * d;
  }
  return detail::make_op<T>(Tensor<T>::scalar(acc), {a, b}, [=](Node<T>* n) {
    return [n, a, b] {
      const T g = T(2) * n->grad.v[0];
      for (size_t i = 0; i < a.value().v.size(); ++i) {
        const T d = g * (a.value().v[i] - b.value().v[i]);
        if (a.requires_grad()) a.node()->ensure_grad().v[i] += d;
        if (b.requires_grad()) b.node()->ensure_grad().v[i] -= d;
      }
    };
  });
}

/// Gram matrix of a CHW feature map: G = F F^T / (C*H*W) with F = (C, H*W).
template <typename T>
Var<T> gram(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank != 3) throw ValidationError("gram: CHW input required");
  const int c = s.d[0];
  const int64_t hw = static_cast<int64_t>(s.d[1]) * s.d[2];
  const T inv = T(1) / T(c * hw);
  Tensor<T> out(Shape::mat(c, c));
  detail::ConstMatMap<T> f(x.value().data(), c, hw);
  detail::MatMap<T> g(out.data(), c, c);
  g.noalias() = f * f.transpose() * inv;
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x, c, hw, inv] {
      if (!x.requires_grad()) return;
      detail::ConstMatMap<T> f(x.value().data(), c, hw);
      detail::ConstMatMap<T> dg(n->grad.data(), c, c);
      detail::MatMap<T> dx(x.node()->ensure_grad().data(), c, hw);
      dx.noalias() += (dg + dg.transpose()) * f * inv;
    };
  });
}

/// Weighted sum of scalar losses.
template <typename T>
Var<T> weighted_sum(const std::vector<std::pair<T, Var<T>>>& terms) {
  T acc(0);
  for (const auto& [wgt, v] : terms) {
    if (v.shape().rank != 0) throw ValidationError("weighted_sum: scalar terms required");
    acc += wgt * v.value().v[0];
  }
  auto node = std::make_shared<Node<T>>();
  node->owned = Tensor<T>::scalar(acc);
  node->val = &node->owned;
  for (const auto& [wgt, v] : terms) node->requires_grad |= v.requires_grad();
  if (node->requires_grad) {
    for (const auto& [wgt, v] : terms) node->inputs.push_back(v.ptr());
    Node<T>* n = node.get();
    auto copy = terms;
    node->backprop = [n, copy] {
      for (const auto& [wgt, v] : copy) {
        if (v.requires_grad()) v.node()->ensure_grad().v[0] += wgt * n->grad.v[0];
      }
    };
  }
  return Var<T>(node);
}

/// Normalized-Lab (3,H,W) -> clamped sRGB (3,H,W); the denormalization and
/// the colorimetric transform in one differentiable op. Matches
/// color::lab_to_srgb_pixel exactly on the forward path.
template <typename T>
Var<T> lab_to_srgb_norm(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank != 3 || s.d[0] != 3) throw ValidationError("lab_to_srgb: (3,H,W) required");
  const int64_t hw = static_cast<int64_t>(s.d[1]) * s.d[2];
  Tensor<T> out(s);
  const T* in = x.value().data();
  for (int64_t i = 0; i < hw; ++i) {
    const auto lab = color::denormalize_lab_pixel<T>({in[i], in[hw + i], in[2 * hw + i]});
    const auto rgb = color::lab_to_srgb_pixel<T>(lab);
    out.v[i] = rgb[0];
    out.v[hw + i] = rgb[1];
    out.v[2 * hw + i] = rgb[2];
  }
  return detail::make_op<T>(std::move(out), {x}, [=](Node<T>* n) {
    return [n, x, hw] {
      if (!x.requires_grad()) return;
      const T* in = x.value().data();
      Tensor<T>& dx = x.node()->ensure_grad();
      const auto& m = color::kXyzToRgb;
      for (int64_t i = 0; i < hw; ++i) {
        // Recompute the pixel's intermediates.
        const auto lab = color::denormalize_lab_pixel<T>({in[i], in[hw + i], in[2 * hw + i]});
        const T fy = (lab[0] + T(16)) / T(116);
        const T fx = fy + lab[1] / T(500);
        const T fz = fy - lab[2] / T(200);
        const T xyz[3] = {T(color::kWhiteX) * color::detail::lab_f_inv(fx),
                          T(color::kWhiteY) * color::detail::lab_f_inv(fy),
                          T(color::kWhiteZ) * color::detail::lab_f_inv(fz)};
        T dlin[3];
        for (int c = 0; c < 3; ++c) {
          const T lin = T(m[3 * c]) * xyz[0] + T(m[3 * c + 1]) * xyz[1] + T(m[3 * c + 2]) * xyz[2];
          const T srgb = color::detail::srgb_gamma(lin);
          const bool clamped = srgb < T(0) || srgb > T(1);
          const T g = clamped ? T(0) : n->grad.v[c * hw + i];
          dlin[c] = g * color::detail::srgb_gamma_deriv(lin);
        }
        T dxyz[3];
        for (int c = 0; c < 3; ++c) {
          dxyz[c] = T(m[c]) * dlin[0] + T(m[3 + c]) * dlin[1] + T(m[6 + c]) * dlin[2];
        }
        const T dfx = dxyz[0] * T(color::kWhiteX) * color::detail::lab_f_inv_deriv(fx);
        const T dfy = dxyz[1] * T(color::kWhiteY) * color::detail::lab_f_inv_deriv(fy);
        const T dfz = dxyz[2] * T(color::kWhiteZ) * color::detail::lab_f_inv_deriv(fz);
        const T dl = (dfx + dfy + dfz) / T(116);
        const T da = dfx / T(500);
        const T db = -dfz / T(200);
        dx.v[i] += dl * T(color::kNormL);
        dx.v[hw + i] += da * T(color::kNormAb);
        dx.v[2 * hw + i] += db * T(color::kNormAb);
      }
    };
  });
}

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// reachable node with requires_grad set.
template <typename T>
void backward(const Var<T>& loss) {
  if (loss.shape().rank != 0) throw ValidationError("backward: scalar loss required");
  if (!loss.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      Node<T>* next = node->inputs[idx++].get();
      if (next->requires_grad && !seen.count(next)) {
        seen.insert(next);
        stack.push_back({next, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad().v[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop && (*it)->grad_ready) (*it)->backprop();
  }
}

/// Fan-in scaled uniform init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
template <typename T>
Tensor<T> he_uniform(const Shape& shape, int64_t fan_in, Rng& rng) {
  Tensor<T> t(shape);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (T& v : t.v) v = static_cast<T>(rng.range(-limit, limit));
  return t;
}

}  // namespace relight::nn
