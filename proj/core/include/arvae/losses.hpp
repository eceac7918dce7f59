#pragma once

#include "arvae/ops.hpp"

namespace arvae {

template <typename T>
std::vector<T> gaussian_taps(int size = 11, double sigma = 1.5) {
  std::vector<T> k(size);
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    double d = i - (size - 1) / 2.0;
    double v = std::exp(-d * d / (2.0 * sigma * sigma));
    k[i] = static_cast<T>(v);
    sum += v;
  }
  for (T& v : k) v = static_cast<T>(v / sum);
  return k;
}

// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5), standard
// stabilizers for a [0,1] dynamic range.
template <typename T>
Var ssim_g(Tape<T>& tp, Var a, Var b) {
  detail::check_same_shape(tp, a, b, "ssim");
  const Shape& s = tp.val(a).shape();
  require(s.rank == 4, "ssim wants (B,C,H,W), got ", s.str());
  require(s[2] >= 11 && s[3] >= 11, "ssim: frames smaller than the 11x11 window: ", s.str());
  const std::vector<T> k = gaussian_taps<T>();
  const T c1 = static_cast<T>(1e-4), c2 = static_cast<T>(9e-4);

  Var mu_a = sep_blur_valid(tp, a, k);
  Var mu_b = sep_blur_valid(tp, b, k);
  Var aa = sep_blur_valid(tp, mul(tp, a, a), k);
  Var bb = sep_blur_valid(tp, mul(tp, b, b), k);
  Var ab = sep_blur_valid(tp, mul(tp, a, b), k);

  Var mu_aa = mul(tp, mu_a, mu_a);
  Var mu_bb = mul(tp, mu_b, mu_b);
  Var mu_ab = mul(tp, mu_a, mu_b);
  Var var_a = sub(tp, aa, mu_aa);
  Var var_b = sub(tp, bb, mu_bb);
  Var cov = sub(tp, ab, mu_ab);

  Var num = mul(tp, add_scalar(tp, mul_scalar(tp, mu_ab, T(2)), c1),
                add_scalar(tp, mul_scalar(tp, cov, T(2)), c2));
  Var den = mul(tp, add_scalar(tp, add(tp, mu_aa, mu_bb), c1),
                add_scalar(tp, add(tp, var_a, var_b), c2));
  return mean_all(tp, div(tp, num, den));
}

// Plain-tensor convenience; accepts (C,H,W) or (B,C,H,W).
template <typename T>
T ssim(const Tensor<T>& a, const Tensor<T>& b) {
  Tape<T> tp(false);
  auto lift = [&](const Tensor<T>& t) {
    return t.rank() == 3 ? t.reshaped(Shape{1, t.dim(0), t.dim(1), t.dim(2)}) : t;
  };
  return tp.scalar(ssim_g(tp, tp.constant(lift(a)), tp.constant(lift(b))));
}

// Optional plug-in for a learned perceptual distance. When absent, its loss
// weight is forced to zero.
template <typename T>
struct PerceptualScorer {
  virtual ~PerceptualScorer() = default;
  virtual Var operator()(Tape<T>& tp, Var a, Var b) = 0;
};

template <typename T>
struct LossWeights {
  T lambda_ssim = static_cast<T>(0.5);
  T lambda_perceptual = static_cast<T>(0.5);
  PerceptualScorer<T>* scorer = nullptr;
  T effective_perceptual() const { return scorer ? lambda_perceptual : T(0); }
};

template <typename T>
struct LossParts {
  Var total;
  Var mse;        // masked mean of the MSE term
  Var ssim_term;  // masked mean of (1 - SSIM); zero node when lambda_ssim == 0
};

// Masked composite loss: mean over supervised frames of
// MSE + l1*(1-SSIM) + l2*perceptual. Unsupervised frames contribute nothing,
// in value or gradient (their terms are never built).
template <typename T>
LossParts<T> reconstruction_loss_parts(Tape<T>& tp, const std::vector<Var>& x_hat,
                                       const std::vector<Var>& x,
                                       const std::vector<bool>& mask,
                                       const LossWeights<T>& w) {
  require(x_hat.size() == x.size() && x.size() == mask.size(),
          "reconstruction_loss: frame/mask count mismatch");
  int m = 0;
  for (bool v : mask) m += v ? 1 : 0;
  require(m > 0, "reconstruction_loss: all frames masked out");
  const T inv = T(1) / static_cast<T>(m);
  const T l1 = w.lambda_ssim;
  const T l2 = w.effective_perceptual();

  Var mse_acc, ssim_acc, total_acc;
  auto acc = [&](Var& slot, Var v) { slot = slot.valid() ? add(tp, slot, v) : v; };
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    Var d = sub(tp, x_hat[t], x[t]);
    Var mse_t = mean_all(tp, mul(tp, d, d));
    acc(mse_acc, mse_t);
    Var frame_total = mse_t;
    if (l1 != T(0)) {
      Var s = ssim_g(tp, x_hat[t], x[t]);
      Var one_minus = add_scalar(tp, mul_scalar(tp, s, T(-1)), T(1));
      acc(ssim_acc, one_minus);
      frame_total = add(tp, frame_total, mul_scalar(tp, one_minus, l1));
    }
    if (l2 != T(0)) {
      Var p = (*w.scorer)(tp, x_hat[t], x[t]);
      frame_total = add(tp, frame_total, mul_scalar(tp, p, l2));
    }
    acc(total_acc, frame_total);
  }
  LossParts<T> out;
  out.total = mul_scalar(tp, total_acc, inv);
  out.mse = mul_scalar(tp, mse_acc, inv);
  out.ssim_term = ssim_acc.valid() ? mul_scalar(tp, ssim_acc, inv)
                                   : tp.constant(Tensor<T>(Shape{1}));
  return out;
}

template <typename T>
Var reconstruction_loss(Tape<T>& tp, const std::vector<Var>& x_hat,
                        const std::vector<Var>& x, const std::vector<bool>& mask,
                        const LossWeights<T>& w) {
  return reconstruction_loss_parts(tp, x_hat, x, mask, w).total;
}

}  // namespace arvae
