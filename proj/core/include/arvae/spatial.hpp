#pragma once

#include "arvae/model_config.hpp"
#include "arvae/nn.hpp"

namespace arvae {

// Encodes what temporal propagation cannot supply: the current frame is
// compared against the propagated features scale by scale and reduced to the
// compact spatial supplement.
template <typename T>
struct SpatialEncoder {
  bool multi_scale = true;
  Act act;
  ResBlock<T> first;
  std::vector<Conv2d<T>> down;
  std::vector<ResBlock<T>> fuse;
  Conv2d<T> proj;  // e_N -> C2, linear

  SpatialEncoder() = default;
  SpatialEncoder(const ModelConfig& cfg, Rng& rng)
      : multi_scale(cfg.multi_scale), act(cfg.activation) {
    const auto& e = cfg.spatial_widths;
    const auto& u = cfg.fused_widths;
    int n = cfg.down_exponent;
    first = ResBlock<T>(3 + (multi_scale ? u[0] : 0), e[0], act, rng);
    for (int i = 1; i <= n; ++i) {
      down.push_back(Conv2d<T>(e[i - 1], e[i], 3, 2, rng));
      if (multi_scale)
        fuse.push_back(ResBlock<T>(e[i] + u[i], e[i], act, rng));
    }
    if (!multi_scale) fuse.push_back(ResBlock<T>(e[n] + u[n], e[n], act, rng));
    proj = Conv2d<T>(e[n], cfg.spatial_channels, 1, 1, rng);
  }

  Var operator()(Tape<T>& tp, const std::vector<Var>& p_e, Var x_t) {
    int n = static_cast<int>(down.size());
    require(static_cast<int>(p_e.size()) == n + 1, "encode_spatial: pyramid depth");
    Var h = multi_scale ? first(tp, concat_ch(tp, {x_t, p_e[0]})) : first(tp, x_t);
    for (int i = 1; i <= n; ++i) {
      h = activate(tp, down[i - 1](tp, h), act);
      if (multi_scale)
        h = fuse[i - 1](tp, concat_ch(tp, {h, p_e[i]}));
      else if (i == n)
        h = fuse[0](tp, concat_ch(tp, {h, p_e[n]}));
    }
    return proj(tp, h);
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    first.reg(r, prefix + ".first");
    for (std::size_t i = 0; i < down.size(); ++i)
      down[i].reg(r, prefix + ".down" + std::to_string(i));
    for (std::size_t i = 0; i < fuse.size(); ++i)
      fuse[i].reg(r, prefix + ".fuse" + std::to_string(i));
    proj.reg(r, prefix + ".proj");
  }
};

// Upsamples the spatial supplement, fusing propagated features per scale.
// At full resolution the fused features, the finest propagated features and
// the previous state are merged into the new state, from which the frame is
// reconstructed with a bounded activation.
template <typename T>
struct SpatialDecoder {
  bool multi_scale = true;
  Act act;
  Conv2d<T> stem;  // C2 -> g_N
  ResBlock<T> fuse_coarse;
  std::vector<Conv2d<T>> up;    // level N-1 .. 0
  std::vector<ResBlock<T>> fuse;  // levels N-1 .. 1 (multi-scale only)
  ResBlock<T> state_block;
  Conv2d<T> out1, out2;

  SpatialDecoder() = default;
  SpatialDecoder(const ModelConfig& cfg, Rng& rng)
      : multi_scale(cfg.multi_scale), act(cfg.activation) {
    const auto& g = cfg.spatial_widths;
    const auto& u = cfg.fused_widths;
    int n = cfg.down_exponent;
    stem = Conv2d<T>(cfg.spatial_channels, g[n], 3, 1, rng);
    fuse_coarse = ResBlock<T>(g[n] + u[n], g[n], act, rng);
    for (int i = n - 1; i >= 0; --i) {
      up.push_back(Conv2d<T>(g[i + 1], g[i], 3, 1, rng));
      if (i >= 1 && multi_scale) fuse.push_back(ResBlock<T>(g[i] + u[i], g[i], act, rng));
    }
    int state_in = g[0] + (multi_scale ? u[0] : 0) + cfg.state_channels;
    state_block = ResBlock<T>(state_in, cfg.state_channels, act, rng);
    out1 = Conv2d<T>(cfg.state_channels, g[0], 3, 1, rng);
    out2 = Conv2d<T>(g[0], 3, 3, 1, rng);
  }

  std::pair<Var, Var> operator()(Tape<T>& tp, Var s, const std::vector<Var>& p_d,
                                 Var g_prev) {
    int n = static_cast<int>(up.size());
    require(static_cast<int>(p_d.size()) == n + 1, "decode_spatial: pyramid depth");
    Var h = activate(tp, stem(tp, s), act);
    h = fuse_coarse(tp, concat_ch(tp, {h, p_d[n]}));
    for (int i = n - 1; i >= 0; --i) {
      h = activate(tp, up[n - 1 - i](tp, upsample_nearest2x(tp, h)), act);
      if (i >= 1 && multi_scale) h = fuse[n - 1 - i](tp, concat_ch(tp, {h, p_d[i]}));
    }
    std::vector<Var> cat{h};
    if (multi_scale) cat.push_back(p_d[0]);
    cat.push_back(g_prev);
    Var g_t = state_block(tp, concat_ch(tp, cat));
    Var x = sigmoid(tp, out2(tp, activate(tp, out1(tp, g_t), act)));
    return {x, g_t};
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    stem.reg(r, prefix + ".stem");
    fuse_coarse.reg(r, prefix + ".fuse_coarse");
    for (std::size_t i = 0; i < up.size(); ++i)
      up[i].reg(r, prefix + ".up" + std::to_string(i));
    for (std::size_t i = 0; i < fuse.size(); ++i)
      fuse[i].reg(r, prefix + ".fuse" + std::to_string(i));
    state_block.reg(r, prefix + ".state");
    out1.reg(r, prefix + ".out1");
    out2.reg(r, prefix + ".out2");
  }
};

}  // namespace arvae
