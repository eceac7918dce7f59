#pragma once

#include <doctest.h>

#include <arvae/losses.hpp>
#include <arvae/rng.hpp>
#include <arvae/tensor.hpp>

namespace testsupport {

using arvae::Rng;
using arvae::Shape;
using arvae::Tensor;

inline Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t) v = d(rng);
  return t;
}

struct FdReport {
  double max_rel = 0;
  double max_abs = 0;
  int checked = 0;
};

// Central finite differences against an analytic gradient, on a random
// subset of coordinates. eval() must recompute the scalar loss from the
// current contents of x.
template <class F>
FdReport fd_check(F&& eval, Tensor<double>& x, const Tensor<double>& analytic,
                  int samples, double h, Rng& rng) {
  REQUIRE(analytic.size() == x.size());
  FdReport rep;
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  for (int s = 0; s < samples; ++s) {
    std::size_t i = (samples >= static_cast<int>(x.size())) ? s % x.size() : pick(rng);
    double keep = x[i];
    x[i] = keep + h;
    double up = eval();
    x[i] = keep - h;
    double dn = eval();
    x[i] = keep;
    double fd = (up - dn) / (2 * h);
    double an = analytic[i];
    double abs_err = std::abs(fd - an);
    double rel = abs_err / std::max(std::max(std::abs(fd), std::abs(an)), 1e-6);
    rep.max_abs = std::max(rep.max_abs, abs_err);
    rep.max_rel = std::max(rep.max_rel, rel);
    ++rep.checked;
  }
  return rep;
}

// Direct per-window SSIM, independent of the graph implementation.
inline double ssim_reference(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  REQUIRE(a.rank() == 4);
  const auto k = arvae::gaussian_taps<double>();
  const int K = static_cast<int>(k.size());
  const double c1 = 1e-4, c2 = 9e-4;
  int B = a.dim(0), C = a.dim(1), H = a.dim(2), W = a.dim(3);
  double acc = 0;
  long count = 0;
  for (int bb = 0; bb < B; ++bb)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y + K <= H; ++y)
        for (int x = 0; x + K <= W; ++x) {
          double mu_a = 0, mu_b = 0, aa = 0, bbv = 0, ab = 0;
          for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
              double w = k[i] * k[j];
              double va = a.at(bb, c, y + i, x + j);
              double vb = b.at(bb, c, y + i, x + j);
              mu_a += w * va;
              mu_b += w * vb;
              aa += w * va * va;
              bbv += w * vb * vb;
              ab += w * va * vb;
            }
          double var_a = aa - mu_a * mu_a;
          double var_b = bbv - mu_b * mu_b;
          double cov = ab - mu_a * mu_b;
          double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
          double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
          acc += num / den;
          ++count;
        }
  return acc / count;
}

}  // namespace testsupport
