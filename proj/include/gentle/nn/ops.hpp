#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gentle/nn/autodiff.hpp"
#include "gentle/rng.hpp"

namespace gentle::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

/// Clamp applied to probabilities inside bce.
inline constexpr double kProbabilityFloor = 1e-7;

namespace detail {

[[noreturn]] inline void shape_error(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

[[noreturn]] inline void shape_error(const char* op, const Shape& a, const Shape& b) {
  shape_error(op, "incompatible shapes " + to_string(a) + " and " + to_string(b));
}

inline void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) shape_error(op, "expected rank " + std::to_string(rank) + ", got " + to_string(s));
}

template <typename T>
Node<T>& parent(Node<T>& n, std::size_t i) {
  return *n.parents[i];
}

}  // namespace detail

/// y = W^T x + b per column. x {D, N}, w {D, O}, b {O} -> {O, N}.
template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  detail::require_rank("dense", x.shape(), 2);
  detail::require_rank("dense", w.shape(), 2);
  if (x.shape()[0] != w.shape()[0]) detail::shape_error("dense", x.shape(), w.shape());
  if (b.shape() != Shape{w.shape()[1]}) detail::shape_error("dense", w.shape(), b.shape());
  const int D = x.shape()[0], N = x.shape()[1], O = w.shape()[1];
  Tensor<T> out({O, N});
  auto Y = out.matrix(N, O);
  Y.noalias() = x.value().matrix(N, D) * w.value().matrix(D, O);
  Y.rowwise() += b.data().matrix().transpose();
  return Var<T>::result(std::move(out), {x, w, b}, [N, D, O](Node<T>& n) {
    ConstMatMap<T> dY(n.grad.data(), N, O);
    auto& nx = detail::parent(n, 0);
    auto& nw = detail::parent(n, 1);
    auto& nb = detail::parent(n, 2);
    if (nx.requires_grad) MatMap<T>(nx.ensure_grad().data(), N, D).noalias() += dY * nw.value.matrix(D, O).transpose();
    if (nw.requires_grad) MatMap<T>(nw.ensure_grad().data(), D, O).noalias() += nx.value.matrix(N, D).transpose() * dY;
    if (nb.requires_grad) nb.ensure_grad().matrix() += dY.colwise().sum().transpose();
  });
}

struct ConvGeometry {
  int C, N, H, W, O, k, stride, pad, Ho, Wo;
  Eigen::Index M() const { return Eigen::Index(N) * Ho * Wo; }
  Eigen::Index K() const { return Eigen::Index(C) * k * k; }
};

namespace detail {

// Column r = (c, ky, kx) of the (N*Ho*Wo) x (C*k*k) patch matrix.
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
  const Eigen::Index M = g.M();
  for (int c = 0; c < g.C; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        T* dst = col + M * ((Eigen::Index(c) * g.k + ky) * g.k + kx);
        for (int n = 0; n < g.N; ++n) {
          const T* src = x + (Eigen::Index(c) * g.N + n) * g.H * g.W;
          for (int oy = 0; oy < g.Ho; ++oy) {
            const int iy = oy * g.stride + ky - g.pad;
            if (iy < 0 || iy >= g.H) {
              std::fill(dst, dst + g.Wo, T(0));
              dst += g.Wo;
              continue;
            }
            const T* row = src + Eigen::Index(iy) * g.W;
            for (int ox = 0; ox < g.Wo; ++ox) {
              const int ix = ox * g.stride + kx - g.pad;
              *dst++ = (ix >= 0 && ix < g.W) ? row[ix] : T(0);
            }
          }
        }
      }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* dx) {
  const Eigen::Index M = g.M();
  for (int c = 0; c < g.C; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const T* src = col + M * ((Eigen::Index(c) * g.k + ky) * g.k + kx);
        for (int n = 0; n < g.N; ++n) {
          T* dst = dx + (Eigen::Index(c) * g.N + n) * g.H * g.W;
          for (int oy = 0; oy < g.Ho; ++oy) {
            const int iy = oy * g.stride + ky - g.pad;
            if (iy < 0 || iy >= g.H) {
              src += g.Wo;
              continue;
            }
            T* row = dst + Eigen::Index(iy) * g.W;
            for (int ox = 0; ox < g.Wo; ++ox, ++src) {
              const int ix = ox * g.stride + kx - g.pad;
              if (ix >= 0 && ix < g.W) row[ix] += *src;
            }
          }
        }
      }
}

}  // namespace detail

/// Cross-correlation. x {C, N, H, W}, w {O, C, k, k}, b {O} -> {O, N, Ho, Wo}.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride = 1, int pad = 0) {
  detail::require_rank("conv2d", x.shape(), 4);
  detail::require_rank("conv2d", w.shape(), 4);
  const Shape &xs = x.shape(), &ws = w.shape();
  if (ws[1] != xs[0] || ws[2] != ws[3]) detail::shape_error("conv2d", xs, ws);
  if (b.shape() != Shape{ws[0]}) detail::shape_error("conv2d", ws, b.shape());
  if (stride < 1 || pad < 0) detail::shape_error("conv2d", "stride must be >= 1 and pad >= 0");
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, pad, 0, 0};
  g.Ho = (g.H + 2 * pad - g.k) / stride + 1;
  g.Wo = (g.W + 2 * pad - g.k) / stride + 1;
  if (g.H + 2 * pad < g.k || g.W + 2 * pad < g.k) detail::shape_error("conv2d", xs, ws);

  Mat<T> col(g.M(), g.K());
  detail::im2col(g, x.data().data(), col.data());
  Tensor<T> out({g.O, g.N, g.Ho, g.Wo});
  auto Y = out.matrix(g.M(), g.O);
  Y.noalias() = col * w.value().matrix(g.K(), g.O);
  Y.rowwise() += b.data().matrix().transpose();

  return Var<T>::result(std::move(out), {x, w, b}, [g, col = std::move(col)](Node<T>& n) {
    ConstMatMap<T> dY(n.grad.data(), g.M(), g.O);
    auto& nx = detail::parent(n, 0);
    auto& nw = detail::parent(n, 1);
    auto& nb = detail::parent(n, 2);
    if (nw.requires_grad) MatMap<T>(nw.ensure_grad().data(), g.K(), g.O).noalias() += col.transpose() * dY;
    if (nb.requires_grad) nb.ensure_grad().matrix() += dY.colwise().sum().transpose();
    if (nx.requires_grad) {
      const Mat<T> dcol = dY * nw.value.matrix(g.K(), g.O).transpose();
      detail::col2im(g, dcol.data(), nx.ensure_grad().data());
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x.shape(), x.data().max(T(0)));
  return Var<T>::result(std::move(out), {x}, [](Node<T>& n) {
    auto& nx = detail::parent(n, 0);
    nx.ensure_grad() += (nx.value.data > T(0)).select(n.grad, T(0));
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  // Split by sign so exp never overflows.
  Buffer<T> y = x.data().unaryExpr([](T v) {
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  });
  Tensor<T> out(x.shape(), std::move(y));
  return Var<T>::result(std::move(out), {x}, [](Node<T>& n) {
    const auto& y = n.value.data;
    detail::parent(n, 0).ensure_grad() += n.grad * y * (T(1) - y);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) detail::shape_error("add", a.shape(), b.shape());
  Tensor<T> out(a.shape(), a.data() + b.data());
  return Var<T>::result(std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t i = 0; i < 2; ++i) {
      auto& p = detail::parent(n, i);
      if (p.requires_grad) p.ensure_grad() += n.grad;
    }
  });
}

/// Non-overlapping k x k max pooling over {C, N, H, W}; trailing rows and
/// columns that do not fill a window are dropped. Ties go to the first maximum.
template <typename T>
Var<T> max_pool2d(const Var<T>& x, int k = 2) {
  detail::require_rank("max_pool2d", x.shape(), 4);
  const int C = x.shape()[0], N = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (k < 1 || H < k || W < k) detail::shape_error("max_pool2d", "window " + std::to_string(k) + " exceeds " + to_string(x.shape()));
  const int Ho = H / k, Wo = W / k;
  Tensor<T> out({C, N, Ho, Wo});
  std::vector<std::int32_t> argmax(std::size_t(out.size()));
  const T* src = x.data().data();
  Eigen::Index o = 0;
  for (Eigen::Index plane = 0; plane < Eigen::Index(C) * N; ++plane) {
    const Eigen::Index base = plane * H * W;
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox, ++o) {
        Eigen::Index best = base + Eigen::Index(oy * k) * W + ox * k;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const Eigen::Index i = base + Eigen::Index(oy * k + dy) * W + ox * k + dx;
            if (src[i] > src[best]) best = i;
          }
        out.data(o) = src[best];
        argmax[std::size_t(o)] = static_cast<std::int32_t>(best);
      }
  }
  return Var<T>::result(std::move(out), {x}, [argmax = std::move(argmax)](Node<T>& n) {
    auto& g = detail::parent(n, 0).ensure_grad();
    for (std::size_t i = 0; i < argmax.size(); ++i) g(argmax[i]) += n.grad(Eigen::Index(i));
  });
}

/// {C, N, H, W} -> {C, N}.
template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  detail::require_rank("global_avg_pool", x.shape(), 4);
  const int C = x.shape()[0], N = x.shape()[1];
  const Eigen::Index P = Eigen::Index(x.shape()[2]) * x.shape()[3];
  if (P == 0) detail::shape_error("global_avg_pool", "empty spatial extent " + to_string(x.shape()));
  Tensor<T> out({C, N});
  out.data = x.value().matrix(P, Eigen::Index(C) * N).colwise().mean().transpose().array();
  return Var<T>::result(std::move(out), {x}, [P, C, N](Node<T>& n) {
    auto g = detail::parent(n, 0).ensure_grad().matrix();
    MatMap<T>(g.data(), P, Eigen::Index(C) * N).rowwise() += n.grad.matrix().transpose() / T(P);
  });
}

/// Joins along the leading axis; the other extents must agree.
template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs) {
  if (xs.empty()) detail::shape_error("concat", "no inputs");
  Shape shape = xs.front().shape();
  shape[0] = 0;
  for (const auto& x : xs) {
    Shape a = x.shape(), b = xs.front().shape();
    a[0] = b[0] = 0;
    if (a != b) detail::shape_error("concat", xs.front().shape(), x.shape());
    shape[0] += x.shape()[0];
  }
  Tensor<T> out(shape);
  Eigen::Index at = 0;
  std::vector<Eigen::Index> sizes;
  for (const auto& x : xs) {
    out.data.segment(at, x.value().size()) = x.data();
    at += x.value().size();
    sizes.push_back(x.value().size());
  }
  return Var<T>::result(std::move(out), xs, [sizes = std::move(sizes)](Node<T>& n) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      auto& p = detail::parent(n, i);
      if (p.requires_grad) p.ensure_grad() += n.grad.segment(at, sizes[i]);
      at += sizes[i];
    }
  });
}

/// {C, N, H, W} -> {C*H*W, N}.
template <typename T>
Var<T> flatten(const Var<T>& x) {
  detail::require_rank("flatten", x.shape(), 4);
  const int C = x.shape()[0], N = x.shape()[1];
  const Eigen::Index P = Eigen::Index(x.shape()[2]) * x.shape()[3];
  Tensor<T> out({int(C * P), N});
  const T* src = x.data().data();
  for (int c = 0; c < C; ++c)
    for (int n = 0; n < N; ++n)
      for (Eigen::Index p = 0; p < P; ++p) out.data((c * P + p) * N + n) = src[(Eigen::Index(c) * N + n) * P + p];
  return Var<T>::result(std::move(out), {x}, [C, N, P](Node<T>& n) {
    auto& g = detail::parent(n, 0).ensure_grad();
    for (int c = 0; c < C; ++c)
      for (int b = 0; b < N; ++b)
        for (Eigen::Index p = 0; p < P; ++p) g((Eigen::Index(c) * N + b) * P + p) += n.grad((c * P + p) * N + b);
  });
}

/// Inverted dropout: kept units are scaled by 1/(1-rate). Identity outside training.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) detail::shape_error("dropout", "rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const T scale = T(1.0 / (1.0 - rate));
  Buffer<T> mask(x.value().size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = rng.uniform() < rate ? T(0) : scale;
  Tensor<T> out(x.shape(), x.data() * mask);
  return Var<T>::result(std::move(out), {x}, [mask = std::move(mask)](Node<T>& n) {
    detail::parent(n, 0).ensure_grad() += n.grad * mask;
  });
}

/// Mean over the batch (second axis) of the summed binary cross-entropy of
/// every row. p and target are {K, N}; p is clamped to [1e-7, 1-1e-7].
template <typename T>
Var<T> bce(const Var<T>& p, const Tensor<T>& target) {
  detail::require_rank("bce", p.shape(), 2);
  if (p.shape() != target.shape) detail::shape_error("bce", p.shape(), target.shape);
  const int N = p.shape()[1];
  const T lo = T(kProbabilityFloor), hi = T(1) - T(kProbabilityFloor);
  const Buffer<T> pc = p.data().max(lo).min(hi);
  const Buffer<T>& y = target.data;
  T total = -(y * pc.log() + (T(1) - y) * (T(1) - pc).log()).sum();
  Tensor<T> out({1}, total / T(std::max(N, 1)));
  return Var<T>::result(std::move(out), {p}, [target, lo, hi, N](Node<T>& n) {
    auto& np = detail::parent(n, 0);
    const Buffer<T>& pv = np.value.data;
    const Buffer<T>& y = target.data;
    const T scale = n.grad(0) / T(std::max(N, 1));
    const Buffer<T> d = (pv > lo && pv < hi).select(-(y / pv) + (T(1) - y) / (T(1) - pv), T(0));
    np.ensure_grad() += scale * d;
  });
}

/// Sum of x * w with a constant weight tensor; used to project outputs to a scalar.
template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w) {
  if (x.shape() != w.shape) detail::shape_error("weighted_sum", x.shape(), w.shape);
  Tensor<T> out({1}, (x.data() * w.data).sum());
  return Var<T>::result(std::move(out), {x}, [w](Node<T>& n) {
    detail::parent(n, 0).ensure_grad() += n.grad(0) * w.data;
  });
}

}  // namespace gentle::nn
