#pragma once

#include "arvae/model_config.hpp"
#include "arvae/nn.hpp"

namespace arvae {

// Downsampling feature pyramid over the dense motion field. Level 0 is full
// resolution; each block halves it. The coarsest level carries the compact
// temporal latent after a linear 1x1 projection.
template <typename T>
struct MotionPyramidEnc {
  Act act;
  Conv2d<T> stem;
  struct Blk {
    Conv2d<T> down, conv;
  };
  std::vector<Blk> blocks;
  Conv2d<T> proj;  // w_N -> C1, linear

  MotionPyramidEnc() = default;
  MotionPyramidEnc(const ModelConfig& cfg, Rng& rng) : act(cfg.activation) {
    const auto& w = cfg.motion_widths;
    stem = Conv2d<T>(2, w[0], 3, 1, rng);
    for (int i = 1; i <= cfg.down_exponent; ++i)
      blocks.push_back({Conv2d<T>(w[i - 1], w[i], 3, 2, rng), Conv2d<T>(w[i], w[i], 3, 1, rng)});
    proj = Conv2d<T>(w.back(), cfg.temporal_channels, 1, 1, rng);
  }

  std::vector<Var> operator()(Tape<T>& tp, Var m) {
    std::vector<Var> levels;
    Var h = activate(tp, stem(tp, m), act);
    levels.push_back(h);
    for (auto& b : blocks) {
      h = activate(tp, b.down(tp, h), act);
      h = activate(tp, b.conv(tp, h), act);
      levels.push_back(h);
    }
    return levels;
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    stem.reg(r, prefix + ".stem");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].down.reg(r, prefix + ".block" + std::to_string(i) + ".down");
      blocks[i].conv.reg(r, prefix + ".block" + std::to_string(i) + ".conv");
    }
    proj.reg(r, prefix + ".proj");
  }
};

// Mirror image of the encoder pyramid: starts from the compact latent at the
// coarsest resolution and upsamples back to full resolution.
template <typename T>
struct MotionPyramidDec {
  Act act;
  Conv2d<T> stem;  // C1 -> w_N
  struct Blk {
    Conv2d<T> c1, c2;
  };
  std::vector<Blk> blocks;  // produce levels N-1 .. 0

  MotionPyramidDec() = default;
  MotionPyramidDec(const ModelConfig& cfg, Rng& rng) : act(cfg.activation) {
    const auto& w = cfg.motion_widths;
    stem = Conv2d<T>(cfg.temporal_channels, w.back(), 3, 1, rng);
    for (int i = cfg.down_exponent - 1; i >= 0; --i)
      blocks.push_back({Conv2d<T>(w[i + 1], w[i], 3, 1, rng), Conv2d<T>(w[i], w[i], 3, 1, rng)});
  }

  std::vector<Var> operator()(Tape<T>& tp, Var latent) {
    int n = static_cast<int>(blocks.size());
    std::vector<Var> levels(n + 1);
    Var h = activate(tp, stem(tp, latent), act);
    levels[n] = h;
    for (int j = 0; j < n; ++j) {
      h = upsample_nearest2x(tp, h);
      h = activate(tp, blocks[j].c1(tp, h), act);
      h = activate(tp, blocks[j].c2(tp, h), act);
      levels[n - 1 - j] = h;
    }
    return levels;
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    stem.reg(r, prefix + ".stem");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].c1.reg(r, prefix + ".block" + std::to_string(i) + ".c1");
      blocks[i].c2.reg(r, prefix + ".block" + std::to_string(i) + ".c2");
    }
  }
};

// Image feature pyramid of the previous frame; resolutions match the motion
// pyramid level for level.
template <typename T>
struct ImagePyramid {
  Act act;
  Conv2d<T> stem;
  struct Blk {
    Conv2d<T> down, conv;
  };
  std::vector<Blk> blocks;

  ImagePyramid() = default;
  ImagePyramid(const ModelConfig& cfg, Rng& rng) : act(cfg.activation) {
    const auto& w = cfg.image_widths;
    stem = Conv2d<T>(3, w[0], 3, 1, rng);
    for (int i = 1; i <= cfg.down_exponent; ++i)
      blocks.push_back({Conv2d<T>(w[i - 1], w[i], 3, 2, rng), Conv2d<T>(w[i], w[i], 3, 1, rng)});
  }

  std::vector<Var> operator()(Tape<T>& tp, Var frame) {
    std::vector<Var> levels;
    Var h = activate(tp, stem(tp, frame), act);
    levels.push_back(h);
    for (auto& b : blocks) {
      h = activate(tp, b.down(tp, h), act);
      h = activate(tp, b.conv(tp, h), act);
      levels.push_back(h);
    }
    return levels;
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    stem.reg(r, prefix + ".stem");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].down.reg(r, prefix + ".block" + std::to_string(i) + ".down");
      blocks[i].conv.reg(r, prefix + ".block" + std::to_string(i) + ".conv");
    }
  }
};

// Warps image features by per-level displacements projected from motion
// features, then cascades fine-to-coarse: each fused level is downsampled and
// concatenated onto the next. Single-scale mode keeps only the coarsest
// level, which squeezes all temporal transport through the latent resolution.
template <typename T>
struct Propagation {
  bool multi_scale = true;
  Act act;
  std::vector<Conv2d<T>> disp;  // 1x1 -> 2, zero-init
  std::vector<Conv2d<T>> down;  // fused[i-1] stride-2
  std::vector<Conv2d<T>> fuse;

  Propagation() = default;
  Propagation(const ModelConfig& cfg, Rng& rng)
      : multi_scale(cfg.multi_scale), act(cfg.activation) {
    const auto& mw = cfg.motion_widths;
    const auto& iw = cfg.image_widths;
    const auto& fw = cfg.fused_widths;
    int n = cfg.down_exponent;
    if (!multi_scale) {
      disp.push_back(Conv2d<T>(mw[n], 2, 1, 1, rng));
      disp.back().zero_init();
      fuse.push_back(Conv2d<T>(iw[n], fw[n], 3, 1, rng));
      return;
    }
    for (int i = 0; i <= n; ++i) {
      disp.push_back(Conv2d<T>(mw[i], 2, 1, 1, rng));
      disp.back().zero_init();
      int cin = iw[i] + (i > 0 ? fw[i - 1] : 0);
      fuse.push_back(Conv2d<T>(cin, fw[i], 3, 1, rng));
      if (i > 0) down.push_back(Conv2d<T>(fw[i - 1], fw[i - 1], 3, 2, rng));
    }
  }

  // Returns an (N+1)-slot pyramid; in single-scale mode only the last slot
  // holds a valid Var.
  std::vector<Var> operator()(Tape<T>& tp, const std::vector<Var>& motion,
                              const std::vector<Var>& image) {
    require(motion.size() == image.size(), "propagate: pyramid depth mismatch");
    int n1 = static_cast<int>(image.size());
    std::vector<Var> out(n1);
    if (!multi_scale) {
      Var d = disp[0](tp, motion[n1 - 1]);
      Var w = warp(tp, image[n1 - 1], d);
      out[n1 - 1] = activate(tp, fuse[0](tp, w), act);
      return out;
    }
    Var carry;
    for (int i = 0; i < n1; ++i) {
      require(tp.val(motion[i]).dim(2) == tp.val(image[i]).dim(2) &&
                  tp.val(motion[i]).dim(3) == tp.val(image[i]).dim(3),
              "propagate: level ", i, " resolution mismatch");
      Var d = disp[i](tp, motion[i]);
      Var w = warp(tp, image[i], d);
      Var in = w;
      if (i > 0) {
        Var c = activate(tp, down[i - 1](tp, carry), act);
        in = concat_ch(tp, {w, c});
      }
      carry = activate(tp, fuse[i](tp, in), act);
      out[i] = carry;
    }
    return out;
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    for (std::size_t i = 0; i < disp.size(); ++i)
      disp[i].reg(r, prefix + ".disp" + std::to_string(i));
    for (std::size_t i = 0; i < down.size(); ++i)
      down[i].reg(r, prefix + ".down" + std::to_string(i));
    for (std::size_t i = 0; i < fuse.size(); ++i)
      fuse[i].reg(r, prefix + ".fuse" + std::to_string(i));
  }
};

template <typename T>
struct TemporalEncoder {
  MotionPyramidEnc<T> motion;
  ImagePyramid<T> image;
  Propagation<T> prop;

  TemporalEncoder() = default;
  TemporalEncoder(const ModelConfig& cfg, Rng& rng)
      : motion(cfg, rng), image(cfg, rng), prop(cfg, rng) {}

  // (temporal latent, propagated features)
  std::pair<Var, std::vector<Var>> operator()(Tape<T>& tp, Var m, Var x_prev) {
    auto mo = motion(tp, m);
    Var latent = motion.proj(tp, mo.back());
    auto im = image(tp, x_prev);
    return {latent, prop(tp, mo, im)};
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    motion.reg(r, prefix + ".motion");
    image.reg(r, prefix + ".image");
    prop.reg(r, prefix + ".prop");
  }
};

template <typename T>
struct TemporalDecoder {
  MotionPyramidDec<T> motion;
  ImagePyramid<T> image;
  Propagation<T> prop;

  TemporalDecoder() = default;
  TemporalDecoder(const ModelConfig& cfg, Rng& rng)
      : motion(cfg, rng), image(cfg, rng), prop(cfg, rng) {}

  std::vector<Var> operator()(Tape<T>& tp, Var latent, Var x_prev) {
    auto mo = motion(tp, latent);
    auto im = image(tp, x_prev);
    return prop(tp, mo, im);
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    motion.reg(r, prefix + ".motion");
    image.reg(r, prefix + ".image");
    prop.reg(r, prefix + ".prop");
  }
};

}  // namespace arvae
