#pragma once

#include "arvae/model_config.hpp"
#include "arvae/nn.hpp"

namespace arvae {

// Small convolutional image autoencoder for the first frame, which has no
// predecessor to propagate from.
template <typename T>
struct FrameAutoencoder {
  Act act;
  std::vector<Conv2d<T>> enc;
  Conv2d<T> enc_proj;
  Conv2d<T> dec_proj;
  std::vector<Conv2d<T>> dec;
  Conv2d<T> dec_out;

  FrameAutoencoder() = default;
  FrameAutoencoder(const ModelConfig& cfg, Rng& rng) : act(cfg.activation) {
    int d = cfg.first_frame_down;
    auto width = [&](int i) { return cfg.first_frame_width << std::min(i, 2); };
    for (int i = 0; i < d; ++i)
      enc.push_back(Conv2d<T>(i == 0 ? 3 : width(i - 1), width(i), 3, 2, rng));
    enc_proj = Conv2d<T>(width(d - 1), cfg.first_frame_channels, 1, 1, rng);
    dec_proj = Conv2d<T>(cfg.first_frame_channels, width(d - 1), 1, 1, rng);
    for (int i = d - 1; i >= 1; --i)
      dec.push_back(Conv2d<T>(width(i), width(i - 1), 3, 1, rng));
    dec.push_back(Conv2d<T>(width(0), width(0), 3, 1, rng));
    dec_out = Conv2d<T>(width(0), 3, 3, 1, rng);
  }

  Var encode(Tape<T>& tp, Var x) {
    Var h = x;
    for (auto& c : enc) h = activate(tp, c(tp, h), act);
    return enc_proj(tp, h);
  }

  Var decode(Tape<T>& tp, Var z) {
    Var h = activate(tp, dec_proj(tp, z), act);
    for (auto& c : dec) h = activate(tp, c(tp, upsample_nearest2x(tp, h)), act);
    return sigmoid(tp, dec_out(tp, h));
  }

  void reg(ParamRegistry<T>& r, const std::string& prefix) {
    for (std::size_t i = 0; i < enc.size(); ++i)
      enc[i].reg(r, prefix + ".enc" + std::to_string(i));
    enc_proj.reg(r, prefix + ".enc_proj");
    dec_proj.reg(r, prefix + ".dec_proj");
    for (std::size_t i = 0; i < dec.size(); ++i)
      dec[i].reg(r, prefix + ".dec" + std::to_string(i));
    dec_out.reg(r, prefix + ".dec_out");
  }
};

}  // namespace arvae
