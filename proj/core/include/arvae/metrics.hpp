#pragma once

#include "arvae/losses.hpp"

namespace arvae {

// PSNR on [0,1] frames. Identical frames report the cap (100 dB) instead of
// infinity so means stay finite.
constexpr double kPsnrCap = 100.0;

template <typename T>
double psnr_frame(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(), "psnr: shape mismatch ", a.shape().str(), " vs ",
          b.shape().str());
  double mse = 0;
  for (std::size_t i = 0, n = a.size(); i < n; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

struct PsnrReport {
  std::vector<double> per_frame;
  double mean = 0;
};

// clips are (T,3,H,W)
template <typename T>
PsnrReport psnr(const Tensor<T>& x, const Tensor<T>& y) {
  require(x.shape() == y.shape() && x.rank() == 4, "psnr: want matching (T,3,H,W)");
  PsnrReport r;
  for (int t = 0; t < x.dim(0); ++t)
    r.per_frame.push_back(psnr_frame(slice_sample(x, t), slice_sample(y, t)));
  for (double v : r.per_frame) r.mean += v;
  r.mean /= static_cast<double>(r.per_frame.size());
  return r;
}

// Mean endpoint error between flow fields (2,H,W), optionally masked.
template <typename T>
double endpoint_error(const Tensor<T>& est, const Tensor<T>& gt,
                      const Tensor<std::uint8_t>* valid = nullptr) {
  require(est.shape() == gt.shape() && est.rank() == 3 && est.dim(0) == 2,
          "endpoint_error: want matching (2,H,W)");
  int h = est.dim(1), w = est.dim(2);
  double acc = 0;
  long count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (valid && !(*valid).at(0, y, x)) continue;
      double du = est.at(0, y, x) - gt.at(0, y, x);
      double dv = est.at(1, y, x) - gt.at(1, y, x);
      acc += std::sqrt(du * du + dv * dv);
      ++count;
    }
  return count ? acc / count : 0.0;
}

}  // namespace arvae
