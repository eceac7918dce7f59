#include <arvae/losses.hpp>
#include <arvae/metrics.hpp>

#include "support.hpp"

using namespace arvae;
using testsupport::fd_check;
using testsupport::random_tensor;
using testsupport::ssim_reference;

TEST_CASE("ssim of a frame with itself is 1") {
  Rng rng(31);
  Tensor<double> x = random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
  CHECK(std::abs(ssim(x, x) - 1.0) < 1e-6);
  Tensor<float> xf = x.cast<float>();
  CHECK(std::abs(ssim(xf, xf) - 1.0f) < 1e-6f);
}

TEST_CASE("ssim is symmetric") {
  Rng rng(32);
  Tensor<double> x = random_tensor(Shape{1, 1, 14, 14}, rng, 0.0, 1.0);
  Tensor<double> y = random_tensor(Shape{1, 1, 14, 14}, rng, 0.0, 1.0);
  CHECK(std::abs(ssim(x, y) - ssim(y, x)) < 1e-6);
}

TEST_CASE("ssim agrees with the direct per-window computation") {
  Rng rng(33);
  Tensor<double> x = random_tensor(Shape{2, 3, 15, 18}, rng, 0.0, 1.0);
  Tensor<double> y = random_tensor(Shape{2, 3, 15, 18}, rng, 0.0, 1.0);
  CHECK(std::abs(ssim(x, y) - ssim_reference(x, y)) < 1e-9);
}

TEST_CASE("ssim of a checkerboard against its inverse is strongly negative") {
  int h = 16, w = 16;
  Tensor<double> x(Shape{1, 1, h, w});
  Tensor<double> y(Shape{1, 1, h, w});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      double v = ((yy + xx) % 2 == 0) ? 1.0 : 0.0;
      x.at(0, 0, yy, xx) = v;
      y.at(0, 0, yy, xx) = 1.0 - v;
    }
  double s = ssim(x, y);
  CHECK(s < -0.5);
  CHECK(std::abs(s - ssim_reference(x, y)) < 1e-9);
}

TEST_CASE("ssim rejects frames smaller than the window") {
  Tape<double> tp(false);
  Var a = tp.constant(Tensor<double>(Shape{1, 1, 8, 8}));
  CHECK_THROWS_AS(ssim_g(tp, a, a), Error);
}

TEST_CASE("reconstruction loss: hand-computed MSE case") {
  // 2x2 frames, constant difference of 0.5, no SSIM/perceptual terms
  Tensor<double> a = Tensor<double>::full(Shape{1, 3, 2, 2}, 0.75);
  Tensor<double> b = Tensor<double>::full(Shape{1, 3, 2, 2}, 0.25);
  Tape<double> tp;
  LossWeights<double> w;
  w.lambda_ssim = 0;
  w.lambda_perceptual = 0;
  Var loss = reconstruction_loss<double>(tp, {tp.input(a)}, {tp.input(b)}, {true}, w);
  CHECK(tp.scalar(loss) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("loss reduces to MSE exactly when the extra terms are off") {
  Rng rng(34);
  Tensor<double> a = random_tensor(Shape{2, 3, 12, 12}, rng, 0.0, 1.0);
  Tensor<double> b = random_tensor(Shape{2, 3, 12, 12}, rng, 0.0, 1.0);
  double mse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());

  Tape<double> tp;
  LossWeights<double> w;
  w.lambda_ssim = 0;
  w.lambda_perceptual = 0;
  Var loss = reconstruction_loss<double>(tp, {tp.input(a)}, {tp.input(b)}, {true}, w);
  // machine precision: only FMA contraction in the oracle loop may differ
  CHECK(std::abs(tp.scalar(loss) - mse) <= 4 * std::numeric_limits<double>::epsilon() * mse);
}

TEST_CASE("loss terms toggle independently") {
  Rng rng(35);
  Tensor<double> a = random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
  Tensor<double> b = random_tensor(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
  auto value = [&](double l1) {
    Tape<double> tp;
    LossWeights<double> w;
    w.lambda_ssim = l1;
    w.lambda_perceptual = 0;
    auto parts = reconstruction_loss_parts<double>(tp, {tp.input(a)}, {tp.input(b)},
                                                   {true}, w);
    return std::tuple{tp.scalar(parts.total), tp.scalar(parts.mse),
                      tp.scalar(parts.ssim_term)};
  };
  auto [t0, mse0, s0] = value(0.0);
  auto [t5, mse5, s5] = value(0.5);
  CHECK(t0 == mse0);
  CHECK(t5 == doctest::Approx(mse5 + 0.5 * s5).epsilon(1e-12));
  CHECK(mse0 == mse5);
}

TEST_CASE("masked frames contribute exactly zero value and gradient") {
  Rng rng(36);
  Tensor<double> x0 = random_tensor(Shape{1, 3, 12, 12}, rng, 0.0, 1.0);
  Tensor<double> x1 = random_tensor(Shape{1, 3, 12, 12}, rng, 0.0, 1.0);
  Tensor<double> y0 = random_tensor(Shape{1, 3, 12, 12}, rng, 0.0, 1.0);
  Tensor<double> y1 = random_tensor(Shape{1, 3, 12, 12}, rng, 0.0, 1.0);

  LossWeights<double> w;  // default 0.5 SSIM weight exercises both terms
  Tape<double> tp;
  Var h0 = tp.input(x0), h1 = tp.input(x1);
  Var t0 = tp.input(y0), t1 = tp.input(y1);
  Var loss = reconstruction_loss<double>(tp, {h0, h1}, {t0, t1}, {false, true}, w);
  double base = tp.scalar(loss);
  tp.backward(loss);
  CHECK(!tp.has_grad(h0));  // the masked frame's term was never built
  Tensor<double> g0 = tp.grad(h0);
  for (double v : g0) CHECK(v == 0.0);
  CHECK(tp.has_grad(h1));

  // value is invariant to arbitrary perturbation of the masked frame
  Tensor<double> x0_perturbed = random_tensor(Shape{1, 3, 12, 12}, rng, -5.0, 5.0);
  Tape<double> tp2;
  Var loss2 = reconstruction_loss<double>(
      tp2, {tp2.input(x0_perturbed), tp2.input(x1)}, {tp2.input(y0), tp2.input(y1)},
      {false, true}, w);
  CHECK(tp2.scalar(loss2) == base);
}

TEST_CASE("all-false masks are rejected") {
  Tape<double> tp;
  Var a = tp.input(Tensor<double>(Shape{1, 3, 12, 12}));
  LossWeights<double> w;
  CHECK_THROWS_AS(
      (reconstruction_loss<double>(tp, {a}, {a}, {false}, w)), Error);
}

TEST_CASE("loss gradient (MSE+SSIM) matches finite differences") {
  Rng rng(37);
  Tensor<double> a = random_tensor(Shape{1, 1, 12, 12}, rng, 0.2, 0.8);
  Tensor<double> b = random_tensor(Shape{1, 1, 12, 12}, rng, 0.2, 0.8);
  LossWeights<double> w;
  auto build = [&](Tape<double>& tp, Var av) {
    return reconstruction_loss<double>(tp, {av}, {tp.constant(b)}, {true}, w);
  };
  Tape<double> tp;
  Var av = tp.input(a.clone());
  Var loss = build(tp, av);
  tp.backward(loss);
  Tensor<double> g = tp.grad(av);
  auto eval = [&]() {
    Tape<double> t2(false);
    return t2.scalar(build(t2, t2.constant(a)));
  };
  CHECK(fd_check(eval, a, g, 50, 1e-6, rng).max_rel < 1e-4);
}

TEST_CASE("psnr: identity cap, known value, mean") {
  Tensor<float> x = Tensor<float>::full(Shape{2, 3, 8, 8}, 0.5f);
  Tensor<float> y = Tensor<float>::full(Shape{2, 3, 8, 8}, 0.25f);
  auto self = psnr(x, x);
  CHECK(self.per_frame[0] == kPsnrCap);
  auto r = psnr(x, y);
  CHECK(r.per_frame[0] == doctest::Approx(12.0412).epsilon(1e-4));
  CHECK(r.mean == doctest::Approx((r.per_frame[0] + r.per_frame[1]) / 2));
}
