#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <vector>

#include "arvae/tape.hpp"

// Differentiable tensor operations. Every op appends one node to the tape;
// backward closures recompute cheap intermediates (e.g. im2col) instead of
// capturing them. Loops are serial and deterministic; the only threaded code
// path is Eigen's GEMM.

namespace arvae {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

template <typename T>
void check_same_shape(const Tape<T>& tp, Var a, Var b, const char* op) {
  require(tp.val(a).shape() == tp.val(b).shape(), op, ": shape mismatch ",
          tp.val(a).shape().str(), " vs ", tp.val(b).shape().str());
}

template <typename T, int Tag = 0>
std::vector<T>& scratch() {
  static thread_local std::vector<T> buf;
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Var add(Tape<T>& tp, Var a, Var b) {
  detail::check_same_shape(tp, a, b, "add");
  Tensor<T> out = tp.val(a).clone();
  out.add_(tp.val(b));
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a, b](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      t.add_grad(a, g);
      t.add_grad(b, g);
    });
  return y;
}

template <typename T>
Var sub(Tape<T>& tp, Var a, Var b) {
  detail::check_same_shape(tp, a, b, "sub");
  Tensor<T> va = tp.val(a), vb = tp.val(b);
  Tensor<T> out = Tensor<T>::uninit(va.shape());
  for (std::size_t i = 0, n = out.size(); i < n; ++i) out[i] = va[i] - vb[i];
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a, b](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      t.add_grad(a, g);
      t.grad_buffer(b).axpy_(T(-1), g);
    });
  return y;
}

template <typename T>
Var mul(Tape<T>& tp, Var a, Var b) {
  detail::check_same_shape(tp, a, b, "mul");
  Tensor<T> va = tp.val(a), vb = tp.val(b);
  Tensor<T> out = Tensor<T>::uninit(va.shape());
  for (std::size_t i = 0, n = out.size(); i < n; ++i) out[i] = va[i] * vb[i];
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a, b, va, vb](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      Tensor<T>&ga = t.grad_buffer(a), &gb = t.grad_buffer(b);
      for (std::size_t i = 0, n = g.size(); i < n; ++i) {
        ga[i] += g[i] * vb[i];
        gb[i] += g[i] * va[i];
      }
    });
  return y;
}

template <typename T>
Var div(Tape<T>& tp, Var a, Var b) {
  detail::check_same_shape(tp, a, b, "div");
  Tensor<T> va = tp.val(a), vb = tp.val(b);
  Tensor<T> out = Tensor<T>::uninit(va.shape());
  for (std::size_t i = 0, n = out.size(); i < n; ++i) out[i] = va[i] / vb[i];
  Var y = tp.push_value(std::move(out));
  if (tp.recording()) {
    Tensor<T> vout = tp.val(y);
    tp.set_back(y, [y, a, b, vb, vout](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      Tensor<T>&ga = t.grad_buffer(a), &gb = t.grad_buffer(b);
      for (std::size_t i = 0, n = g.size(); i < n; ++i) {
        ga[i] += g[i] / vb[i];
        gb[i] -= g[i] * vout[i] / vb[i];
      }
    });
  }
  return y;
}

template <typename T>
Var add_scalar(Tape<T>& tp, Var a, T s) {
  Tensor<T> out = tp.val(a).clone();
  for (T& v : out) v += s;
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a](Tape<T>& t) { t.add_grad(a, t.grad_buffer(y)); });
  return y;
}

template <typename T>
Var mul_scalar(Tape<T>& tp, Var a, T s) {
  Tensor<T> out = tp.val(a).clone();
  out.scale_(s);
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a, s](Tape<T>& t) {
      t.grad_buffer(a).axpy_(s, t.grad_buffer(y));
    });
  return y;
}

template <typename T>
Var leaky_relu(Tape<T>& tp, Var a, T slope) {
  Tensor<T> va = tp.val(a);
  Tensor<T> out = Tensor<T>::uninit(va.shape());
  for (std::size_t i = 0, n = out.size(); i < n; ++i)
    out[i] = va[i] > T(0) ? va[i] : slope * va[i];
  Var y = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(y, [y, a, va, slope](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      Tensor<T>& ga = t.grad_buffer(a);
      for (std::size_t i = 0, n = g.size(); i < n; ++i)
        ga[i] += va[i] > T(0) ? g[i] : slope * g[i];
    });
  return y;
}

template <typename T>
Var sigmoid(Tape<T>& tp, Var a) {
  const Tensor<T>& va = tp.val(a);
  Tensor<T> out = Tensor<T>::uninit(va.shape());
  for (std::size_t i = 0, n = out.size(); i < n; ++i)
    out[i] = T(1) / (T(1) + std::exp(-va[i]));
  Var y = tp.push_value(std::move(out));
  if (tp.recording()) {
    Tensor<T> s = tp.val(y);
    tp.set_back(y, [y, a, s](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      Tensor<T>& ga = t.grad_buffer(a);
      for (std::size_t i = 0, n = g.size(); i < n; ++i)
        ga[i] += g[i] * s[i] * (T(1) - s[i]);
    });
  }
  return y;
}

template <typename T>
Var stopgrad(Tape<T>& tp, Var a) {
  return tp.constant(tp.val(a));
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Var sum_all(Tape<T>& tp, Var a) {
  const Tensor<T>& va = tp.val(a);
  T s = 0;
  for (const T& v : va) s += v;
  Var y = tp.push_value(Tensor<T>(Shape{1}, {s}));
  if (tp.recording())
    tp.set_back(y, [y, a](Tape<T>& t) {
      T g = t.grad_buffer(y)[0];
      Tensor<T>& ga = t.grad_buffer(a);
      for (T& v : ga) v += g;
    });
  return y;
}

template <typename T>
Var mean_all(Tape<T>& tp, Var a) {
  const Tensor<T>& va = tp.val(a);
  T n = static_cast<T>(va.size());
  T s = 0;
  for (const T& v : va) s += v;
  Var y = tp.push_value(Tensor<T>(Shape{1}, {s / n}));
  if (tp.recording())
    tp.set_back(y, [y, a, n](Tape<T>& t) {
      T g = t.grad_buffer(y)[0] / n;
      Tensor<T>& ga = t.grad_buffer(a);
      for (T& v : ga) v += g;
    });
  return y;
}

// ---------------------------------------------------------------------------
// shape / resolution

template <typename T>
Var concat_ch(Tape<T>& tp, const std::vector<Var>& xs) {
  require(!xs.empty(), "concat_ch: empty");
  const Shape& s0 = tp.val(xs[0]).shape();
  require(s0.rank == 4, "concat_ch wants (B,C,H,W), got ", s0.str());
  int B = s0[0], H = s0[2], W = s0[3];
  int C = 0;
  for (Var v : xs) {
    const Shape& s = tp.val(v).shape();
    require(s.rank == 4 && s[0] == B && s[2] == H && s[3] == W,
            "concat_ch: incompatible ", s.str(), " vs ", s0.str());
    C += s[1];
  }
  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, H, W});
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int b = 0; b < B; ++b) {
    std::size_t off = static_cast<std::size_t>(b) * C * plane;
    for (Var v : xs) {
      const Tensor<T>& x = tp.val(v);
      std::size_t n = static_cast<std::size_t>(x.dim(1)) * plane;
      std::memcpy(out.data() + off, x.data() + static_cast<std::size_t>(b) * n,
                  n * sizeof(T));
      off += n;
    }
  }
  Var y = tp.push_value(std::move(out));
  if (tp.recording()) {
    std::vector<Var> parts = xs;
    tp.set_back(y, [y, parts, B, C, plane](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(y);
      for (int b = 0; b < B; ++b) {
        std::size_t off = static_cast<std::size_t>(b) * C * plane;
        for (Var v : parts) {
          Tensor<T>& gv = t.grad_buffer(v);
          std::size_t n = static_cast<std::size_t>(gv.shape()[1]) * plane;
          T* dst = gv.data() + static_cast<std::size_t>(b) * n;
          const T* src = g.data() + off;
          for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
          off += n;
        }
      }
    });
  }
  return y;
}

template <typename T>
Var avg_pool2(Tape<T>& tp, Var a) {
  const Tensor<T>& x = tp.val(a);
  require(x.rank() == 4, "avg_pool2 wants (B,C,H,W)");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "avg_pool2: odd resolution ", x.shape().str());
  int Ho = H / 2, Wo = W / 2;
  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, Ho, Wo});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < Ho; ++y)
        for (int xo = 0; xo < Wo; ++xo)
          out.at(b, c, y, xo) =
              (x.at(b, c, 2 * y, 2 * xo) + x.at(b, c, 2 * y, 2 * xo + 1) +
               x.at(b, c, 2 * y + 1, 2 * xo) + x.at(b, c, 2 * y + 1, 2 * xo + 1)) *
              T(0.25);
  Var yv = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(yv, [yv, a, B, C, Ho, Wo](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& ga = t.grad_buffer(a);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int y = 0; y < Ho; ++y)
            for (int x = 0; x < Wo; ++x) {
              T q = g.at(b, c, y, x) * T(0.25);
              ga.at(b, c, 2 * y, 2 * x) += q;
              ga.at(b, c, 2 * y, 2 * x + 1) += q;
              ga.at(b, c, 2 * y + 1, 2 * x) += q;
              ga.at(b, c, 2 * y + 1, 2 * x + 1) += q;
            }
    });
  return yv;
}

template <typename T>
Var upsample_nearest2x(Tape<T>& tp, Var a) {
  const Tensor<T>& x = tp.val(a);
  require(x.rank() == 4, "upsample_nearest2x wants (B,C,H,W)");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, 2 * H, 2 * W});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < 2 * H; ++y)
        for (int xo = 0; xo < 2 * W; ++xo)
          out.at(b, c, y, xo) = x.at(b, c, y / 2, xo / 2);
  Var yv = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(yv, [yv, a, B, C, H, W](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& ga = t.grad_buffer(a);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int y = 0; y < 2 * H; ++y)
            for (int x = 0; x < 2 * W; ++x)
              ga.at(b, c, y / 2, x / 2) += g.at(b, c, y, x);
    });
  return yv;
}

namespace detail {

// 2x bilinear resampling positions: src = (dst + 0.5) / 2 - 0.5, clamped.
struct Lerp2x {
  int i0, i1;
  double w1;  // weight of i1; i0 carries 1 - w1
};
inline Lerp2x lerp2x(int dst, int src_size) {
  double s = 0.5 * dst - 0.25;
  if (s < 0) s = 0;
  if (s > src_size - 1) s = src_size - 1;
  int i0 = static_cast<int>(std::floor(s));
  int i1 = i0 + 1 < src_size ? i0 + 1 : src_size - 1;
  return {i0, i1, s - i0};
}

}  // namespace detail

template <typename T>
Var upsample_bilinear2x(Tape<T>& tp, Var a) {
  const Tensor<T>& x = tp.val(a);
  require(x.rank() == 4, "upsample_bilinear2x wants (B,C,H,W)");
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, 2 * H, 2 * W});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < 2 * H; ++y) {
        auto ly = detail::lerp2x(y, H);
        for (int xo = 0; xo < 2 * W; ++xo) {
          auto lx = detail::lerp2x(xo, W);
          double v00 = x.at(b, c, ly.i0, lx.i0), v01 = x.at(b, c, ly.i0, lx.i1);
          double v10 = x.at(b, c, ly.i1, lx.i0), v11 = x.at(b, c, ly.i1, lx.i1);
          out.at(b, c, y, xo) = static_cast<T>(
              (1 - ly.w1) * ((1 - lx.w1) * v00 + lx.w1 * v01) +
              ly.w1 * ((1 - lx.w1) * v10 + lx.w1 * v11));
        }
      }
  Var yv = tp.push_value(std::move(out));
  if (tp.recording())
    tp.set_back(yv, [yv, a, B, C, H, W](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& ga = t.grad_buffer(a);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int y = 0; y < 2 * H; ++y) {
            auto ly = detail::lerp2x(y, H);
            for (int x = 0; x < 2 * W; ++x) {
              auto lx = detail::lerp2x(x, W);
              T gv = g.at(b, c, y, x);
              ga.at(b, c, ly.i0, lx.i0) += static_cast<T>(gv * (1 - ly.w1) * (1 - lx.w1));
              ga.at(b, c, ly.i0, lx.i1) += static_cast<T>(gv * (1 - ly.w1) * lx.w1);
              ga.at(b, c, ly.i1, lx.i0) += static_cast<T>(gv * ly.w1 * (1 - lx.w1));
              ga.at(b, c, ly.i1, lx.i1) += static_cast<T>(gv * ly.w1 * lx.w1);
            }
          }
    });
  return yv;
}

// ---------------------------------------------------------------------------
// convolution

namespace detail {

template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride,
            int pad, int Ho, int Wo, T* col) {
  int row = 0;
  for (int c = 0; c < C; ++c) {
    const T* src = x + static_cast<std::size_t>(c) * H * W;
    for (int iy = 0; iy < kh; ++iy)
      for (int ix = 0; ix < kw; ++ix, ++row) {
        T* dst = col + static_cast<std::size_t>(row) * Ho * Wo;
        for (int y = 0; y < Ho; ++y, dst += Wo) {
          int sy = y * stride + iy - pad;
          if (sy < 0 || sy >= H) {
            std::memset(dst, 0, sizeof(T) * Wo);
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * W;
          if (stride == 1) {
            int x0 = std::max(0, pad - ix);
            int x1 = std::max(x0, std::min(Wo, W - ix + pad));
            if (x0 > 0) std::memset(dst, 0, sizeof(T) * x0);
            if (x1 > x0) std::memcpy(dst + x0, srow + x0 + ix - pad, sizeof(T) * (x1 - x0));
            if (x1 < Wo) std::memset(dst + x1, 0, sizeof(T) * (Wo - x1));
          } else {
            for (int xo = 0; xo < Wo; ++xo) {
              int sx = xo * stride + ix - pad;
              dst[xo] = (sx >= 0 && sx < W) ? srow[sx] : T(0);
            }
          }
        }
      }
  }
}

template <typename T>
void col2im_add(const T* col, int C, int H, int W, int kh, int kw, int stride,
                int pad, int Ho, int Wo, T* dx) {
  int row = 0;
  for (int c = 0; c < C; ++c) {
    T* dst = dx + static_cast<std::size_t>(c) * H * W;
    for (int iy = 0; iy < kh; ++iy)
      for (int ix = 0; ix < kw; ++ix, ++row) {
        const T* src = col + static_cast<std::size_t>(row) * Ho * Wo;
        for (int y = 0; y < Ho; ++y, src += Wo) {
          int sy = y * stride + iy - pad;
          if (sy < 0 || sy >= H) continue;
          T* drow = dst + static_cast<std::size_t>(sy) * W;
          for (int xo = 0; xo < Wo; ++xo) {
            int sx = xo * stride + ix - pad;
            if (sx >= 0 && sx < W) drow[sx] += src[xo];
          }
        }
      }
  }
}

}  // namespace detail

// 2-d convolution, x:(B,Cin,H,W) w:(Cout,Cin,kh,kw) b:(Cout).
template <typename T>
Var conv2d(Tape<T>& tp, Var xv, Var wv, Var bv, int stride, int pad) {
  Tensor<T> x = tp.val(xv), w = tp.val(wv), bias = tp.val(bv);
  require(x.rank() == 4 && w.rank() == 4, "conv2d: bad ranks");
  int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  int Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  require(w.dim(1) == Cin, "conv2d: Cin mismatch ", w.shape().str(), " vs ", x.shape().str());
  require(bias.size() == static_cast<std::size_t>(Cout), "conv2d: bias size");
  int Ho = (H + 2 * pad - kh) / stride + 1;
  int Wo = (W + 2 * pad - kw) / stride + 1;
  require(Ho > 0 && Wo > 0, "conv2d: empty output");
  const int K = Cin * kh * kw;
  const std::size_t M = static_cast<std::size_t>(Ho) * Wo;
  const bool pointwise = (kh == 1 && kw == 1 && stride == 1 && pad == 0);

  Tensor<T> out = Tensor<T>::uninit(Shape{B, Cout, Ho, Wo});
  {
    Eigen::Map<const MatRM<T>> wm(w.data(), Cout, K);
    std::vector<T>& colbuf = detail::scratch<T>();
    if (!pointwise) colbuf.resize(static_cast<std::size_t>(K) * M);
    for (int b = 0; b < B; ++b) {
      const T* xb = x.data() + static_cast<std::size_t>(b) * Cin * H * W;
      const T* colp = xb;
      if (!pointwise) {
        detail::im2col(xb, Cin, H, W, kh, kw, stride, pad, Ho, Wo, colbuf.data());
        colp = colbuf.data();
      }
      Eigen::Map<const MatRM<T>> cm(colp, K, M);
      Eigen::Map<MatRM<T>> om(out.data() + static_cast<std::size_t>(b) * Cout * M, Cout, M);
      om.noalias() = wm * cm;
      for (int c = 0; c < Cout; ++c) om.row(c).array() += bias[c];
    }
  }

  Var yv = tp.push_value(std::move(out));
  if (tp.recording()) {
    tp.set_back(yv, [yv, xv, wv, bv, xc = x, wc = w, B, Cin, H, W, Cout, kh, kw,
                     stride, pad, Ho, Wo, K, M, pointwise](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& gx = t.grad_buffer(xv);
      Tensor<T>& gw = t.grad_buffer(wv);
      Tensor<T>& gb = t.grad_buffer(bv);
      Eigen::Map<const MatRM<T>> wm(wc.data(), Cout, K);
      Eigen::Map<MatRM<T>> gwm(gw.data(), Cout, K);
      std::vector<T>& colbuf = detail::scratch<T, 0>();
      std::vector<T>& dcolbuf = detail::scratch<T, 1>();
      if (!pointwise) {
        colbuf.resize(static_cast<std::size_t>(K) * M);
        dcolbuf.resize(static_cast<std::size_t>(K) * M);
      }
      for (int b = 0; b < B; ++b) {
        const T* xb = xc.data() + static_cast<std::size_t>(b) * Cin * H * W;
        Eigen::Map<const MatRM<T>> gm(g.data() + static_cast<std::size_t>(b) * Cout * M, Cout, M);
        // serial reduction: Eigen's sum() order depends on buffer alignment
        for (int c = 0; c < Cout; ++c) {
          const T* row = g.data() + (static_cast<std::size_t>(b) * Cout + c) * M;
          T acc = 0;
          for (std::size_t i = 0; i < M; ++i) acc += row[i];
          gb[c] += acc;
        }
        if (pointwise) {
          Eigen::Map<const MatRM<T>> cm(xb, K, M);
          gwm.noalias() += gm * cm.transpose();
          Eigen::Map<MatRM<T>> gxm(gx.data() + static_cast<std::size_t>(b) * Cin * H * W, K, M);
          gxm.noalias() += wm.transpose() * gm;
        } else {
          detail::im2col(xb, Cin, H, W, kh, kw, stride, pad, Ho, Wo, colbuf.data());
          Eigen::Map<const MatRM<T>> cm(colbuf.data(), K, M);
          gwm.noalias() += gm * cm.transpose();
          Eigen::Map<MatRM<T>> dcm(dcolbuf.data(), K, M);
          dcm.noalias() = wm.transpose() * gm;
          detail::col2im_add(dcolbuf.data(), Cin, H, W, kh, kw, stride, pad, Ho, Wo,
                             gx.data() + static_cast<std::size_t>(b) * Cin * H * W);
        }
      }
    });
  }
  return yv;
}

// ---------------------------------------------------------------------------
// warping

// Backward bilinear warp: out(p) = src(p + flow(p)), border-clamped.
// flow:(B,2,H,W), channel 0 horizontal, channel 1 vertical, pixel units.
template <typename T>
Var warp(Tape<T>& tp, Var srcv, Var flowv) {
  Tensor<T> src = tp.val(srcv), flow = tp.val(flowv);
  require(src.rank() == 4 && flow.rank() == 4, "warp: bad ranks");
  int B = src.dim(0), C = src.dim(1), H = src.dim(2), W = src.dim(3);
  require(flow.dim(0) == B && flow.dim(1) == 2 && flow.dim(2) == H && flow.dim(3) == W,
          "warp: flow ", flow.shape().str(), " does not match features ", src.shape().str());

  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, H, W});
  for (int b = 0; b < B; ++b)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double sx = x + static_cast<double>(flow.at(b, 0, y, x));
        double sy = y + static_cast<double>(flow.at(b, 1, y, x));
        // NaN-safe clamp: non-finite displacements sample the border instead
        // of indexing out of bounds (the loss guard still sees the NaN
        // through the feature path)
        double cx = sx, cy = sy;
        if (!(cx >= 0)) cx = 0;
        if (cx > W - 1) cx = W - 1;
        if (!(cy >= 0)) cy = 0;
        if (cy > H - 1) cy = H - 1;
        int x0 = static_cast<int>(std::floor(cx));
        int y0 = static_cast<int>(std::floor(cy));
        int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
        int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
        double wx = cx - x0, wy = cy - y0;
        for (int c = 0; c < C; ++c) {
          double v00 = src.at(b, c, y0, x0), v01 = src.at(b, c, y0, x1);
          double v10 = src.at(b, c, y1, x0), v11 = src.at(b, c, y1, x1);
          out.at(b, c, y, x) = static_cast<T>((1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                              wy * ((1 - wx) * v10 + wx * v11));
        }
      }

  Var yv = tp.push_value(std::move(out));
  if (tp.recording()) {
    tp.set_back(yv, [yv, srcv, flowv, srcc = src, flowc = flow, B, C, H, W](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& gsrc = t.grad_buffer(srcv);
      Tensor<T>& gflow = t.grad_buffer(flowv);
      for (int b = 0; b < B; ++b)
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            double sx = x + static_cast<double>(flowc.at(b, 0, y, x));
            double sy = y + static_cast<double>(flowc.at(b, 1, y, x));
            // clamp saturates: no flow gradient outside the frame
            bool in_x = sx > 0.0 && sx < W - 1;
            bool in_y = sy > 0.0 && sy < H - 1;
            double cx = sx, cy = sy;
            if (!(cx >= 0)) cx = 0;
            if (cx > W - 1) cx = W - 1;
            if (!(cy >= 0)) cy = 0;
            if (cy > H - 1) cy = H - 1;
            int x0 = static_cast<int>(std::floor(cx));
            int y0 = static_cast<int>(std::floor(cy));
            int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
            int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
            double wx = cx - x0, wy = cy - y0;
            double gfx = 0, gfy = 0;
            for (int c = 0; c < C; ++c) {
              double gv = g.at(b, c, y, x);
              if (gv == 0) continue;
              gsrc.at(b, c, y0, x0) += static_cast<T>(gv * (1 - wy) * (1 - wx));
              gsrc.at(b, c, y0, x1) += static_cast<T>(gv * (1 - wy) * wx);
              gsrc.at(b, c, y1, x0) += static_cast<T>(gv * wy * (1 - wx));
              gsrc.at(b, c, y1, x1) += static_cast<T>(gv * wy * wx);
              double v00 = srcc.at(b, c, y0, x0), v01 = srcc.at(b, c, y0, x1);
              double v10 = srcc.at(b, c, y1, x0), v11 = srcc.at(b, c, y1, x1);
              gfx += gv * ((1 - wy) * (v01 - v00) + wy * (v11 - v10));
              gfy += gv * ((1 - wx) * (v10 - v00) + wx * (v11 - v01));
            }
            if (in_x) gflow.at(b, 0, y, x) += static_cast<T>(gfx);
            if (in_y) gflow.at(b, 1, y, x) += static_cast<T>(gfy);
          }
    });
  }
  return yv;
}

// ---------------------------------------------------------------------------
// fixed-kernel separable blur (valid region only); used by SSIM

template <typename T>
Var sep_blur_valid(Tape<T>& tp, Var xv, const std::vector<T>& taps) {
  const Tensor<T>& x = tp.val(xv);
  require(x.rank() == 4, "sep_blur_valid wants (B,C,H,W)");
  const int K = static_cast<int>(taps.size());
  int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H >= K && W >= K, "sep_blur_valid: window ", K, " exceeds ", x.shape().str());
  int Ho = H - K + 1, Wo = W - K + 1;

  Tensor<T> tmp = Tensor<T>::uninit(Shape{B, C, H, Wo});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int xo = 0; xo < Wo; ++xo) {
          double acc = 0;
          for (int i = 0; i < K; ++i) acc += taps[i] * static_cast<double>(x.at(b, c, y, xo + i));
          tmp.at(b, c, y, xo) = static_cast<T>(acc);
        }
  Tensor<T> out = Tensor<T>::uninit(Shape{B, C, Ho, Wo});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < Ho; ++y)
        for (int xo = 0; xo < Wo; ++xo) {
          double acc = 0;
          for (int i = 0; i < K; ++i) acc += taps[i] * static_cast<double>(tmp.at(b, c, y + i, xo));
          out.at(b, c, y, xo) = static_cast<T>(acc);
        }

  Var yv = tp.push_value(std::move(out));
  if (tp.recording()) {
    std::vector<T> k = taps;
    tp.set_back(yv, [yv, xv, k, B, C, H, W, Ho, Wo, K](Tape<T>& t) {
      const Tensor<T>& g = t.grad_buffer(yv);
      Tensor<T>& gx = t.grad_buffer(xv);
      Tensor<T> gtmp(Shape{B, C, H, Wo});
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int y = 0; y < Ho; ++y)
            for (int x = 0; x < Wo; ++x) {
              T gv = g.at(b, c, y, x);
              for (int i = 0; i < K; ++i) gtmp.at(b, c, y + i, x) += k[i] * gv;
            }
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int y = 0; y < H; ++y)
            for (int x = 0; x < Wo; ++x) {
              T gv = gtmp.at(b, c, y, x);
              if (gv == T(0)) continue;
              for (int i = 0; i < K; ++i) gx.at(b, c, y, x + i) += k[i] * gv;
            }
    });
  }
  return yv;
}

}  // namespace arvae
