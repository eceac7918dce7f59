#pragma once

#include "arvae/model_config.hpp"
#include "arvae/nn.hpp"

namespace arvae {

// Coarse-to-fine residual flow estimator. Image pyramids are built by 2x2
// average pooling; each level refines the upsampled coarse flow from the
// concatenation (current, warped previous, flow). Final convs start at zero
// so an untrained estimator returns an exactly-zero field, which keeps the
// first autoregressive steps warp-neutral.
template <typename T>
struct MotionEstimator {
  int levels = 4;
  Act act = Act::leaky_relu;
  struct Level {
    Conv2d<T> c1, c2, c3;
  };
  std::vector<Level> lvl;

  MotionEstimator() = default;
  MotionEstimator(const ModelConfig& cfg, Rng& rng)
      : levels(cfg.flow_levels), act(cfg.activation) {
    int w = cfg.flow_width;
    for (int i = 0; i < levels; ++i) {
      Level l;
      l.c1 = Conv2d<T>(8, w, 3, 1, rng);  // 3 + 3 + 2 input channels
      l.c2 = Conv2d<T>(w, w, 3, 1, rng);
      l.c3 = Conv2d<T>(w, 2, 3, 1, rng);
      l.c3.zero_init();
      lvl.push_back(std::move(l));
    }
  }

  Var operator()(Tape<T>& tp, Var x_t, Var x_prev) {
    const Shape& s = tp.val(x_t).shape();
    require(s == tp.val(x_prev).shape(), "estimate_motion: frame shapes differ");
    require(s.rank == 4 && s[1] == 3, "estimate_motion: wants (B,3,H,W), got ", s.str());
    int div = 1 << (levels - 1);
    require(s[2] % div == 0 && s[3] % div == 0, "estimate_motion: ", s[2], "x", s[3],
            " not divisible by 2^", levels - 1);

    std::vector<Var> pt{x_t}, pp{x_prev};
    for (int i = 1; i < levels; ++i) {
      pt.push_back(avg_pool2(tp, pt.back()));
      pp.push_back(avg_pool2(tp, pp.back()));
    }

    Var flow;
    for (int i = levels - 1; i >= 0; --i) {
      const Shape& ls = tp.val(pt[i]).shape();
      if (flow.valid())
        flow = mul_scalar(tp, upsample_bilinear2x(tp, flow), T(2));
      else
        flow = tp.constant(Tensor<T>(Shape{ls[0], 2, ls[2], ls[3]}));
      Var warped = warp(tp, pp[i], flow);
      Var h = concat_ch(tp, {pt[i], warped, flow});
      h = activate(tp, lvl[i].c1(tp, h), act);
      h = activate(tp, lvl[i].c2(tp, h), act);
      flow = add(tp, flow, lvl[i].c3(tp, h));
    }
    return flow;
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    for (std::size_t i = 0; i < lvl.size(); ++i) {
      std::string p = prefix + ".level" + std::to_string(i);
      lvl[i].c1.reg(r, p + ".c1");
      lvl[i].c2.reg(r, p + ".c2");
      lvl[i].c3.reg(r, p + ".c3");
    }
  }
};

}  // namespace arvae
