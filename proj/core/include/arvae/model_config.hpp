#pragma once

#include <string>
#include <vector>

#include "arvae/common.hpp"
#include "arvae/nn.hpp"

namespace arvae {

enum class FirstFrameMode { simple_image_ae, passthrough };

// Architecture hyperparameters for the full autoencoder. The three reference
// variants share C1=2; total latent channels are 4 (r=8) or 16 (r=16, r=32).
struct ModelConfig {
  int height = 64;
  int width = 64;
  int down_exponent = 3;   // N; latent resolution is H/2^N x W/2^N
  int temporal_channels = 2;   // C1
  int spatial_channels = 2;    // C2
  int state_channels = 16;     // C_g
  std::vector<int> motion_widths;   // N+1 pyramid widths
  std::vector<int> image_widths;
  std::vector<int> fused_widths;
  std::vector<int> spatial_widths;
  int flow_levels = 4;   // motion estimator pyramid depth K
  int flow_width = 16;
  bool multi_scale = true;
  bool detach_carry = false;
  FirstFrameMode first_frame = FirstFrameMode::simple_image_ae;
  Act activation = Act::leaky_relu;
  int first_frame_channels = 4;   // latent channels of the frame-1 autoencoder
  int first_frame_down = 3;       // 8x spatial
  int first_frame_width = 16;

  int ratio() const { return 1 << down_exponent; }
  int latent_h() const { return height / ratio(); }
  int latent_w() const { return width / ratio(); }

  static std::vector<int> default_widths(int n, int divisor) {
    static const int table[] = {16, 32, 64, 96, 128, 160, 192};
    std::vector<int> w;
    for (int i = 0; i <= n; ++i)
      w.push_back(std::max(2, table[std::min(i, 6)] / divisor));
    return w;
  }

  void apply_default_widths(int divisor) {
    motion_widths = default_widths(down_exponent, divisor);
    image_widths = motion_widths;
    fused_widths = motion_widths;
    spatial_widths = motion_widths;
  }

  // Paper-parity variants at 256x256: N=3 (C1=2,C2=2), N=4 and N=5 (C1=2,C2=14).
  static ModelConfig paper_variant(int n) {
    ModelConfig c;
    c.height = c.width = 256;
    c.down_exponent = n;
    c.temporal_channels = 2;
    c.spatial_channels = (n == 3) ? 2 : 14;
    c.flow_levels = 5;
    c.flow_width = 32;
    c.first_frame_width = 32;
    c.apply_default_widths(1);
    return c;
  }

  static ModelConfig desk(int hw = 64) {
    ModelConfig c;
    c.height = c.width = hw;
    c.down_exponent = 3;
    c.flow_levels = hw >= 64 ? 4 : 3;
    c.flow_width = 16;
    c.apply_default_widths(2);
    return c;
  }

  void validate() const {
    require(height > 0 && width > 0, "config: non-positive frame size");
    require(down_exponent >= 1, "config: down_exponent must be >= 1");
    int div = 1 << std::max(down_exponent, flow_levels - 1);
    require(height % div == 0 && width % div == 0, "config: ", height, "x", width,
            " not divisible by 2^", std::max(down_exponent, flow_levels - 1));
    require(temporal_channels >= 1 && spatial_channels >= 1, "config: latent channels");
    require(state_channels >= 1, "config: state channels");
    require(flow_levels >= 2, "config: flow_levels must be >= 2");
    auto check_widths = [&](const std::vector<int>& w, const char* name) {
      require(static_cast<int>(w.size()) == down_exponent + 1, "config: ", name,
              " needs ", down_exponent + 1, " entries, got ", w.size());
      for (int v : w) require(v > 0, "config: non-positive width in ", name);
    };
    check_widths(motion_widths, "motion_widths");
    check_widths(image_widths, "image_widths");
    check_widths(fused_widths, "fused_widths");
    check_widths(spatial_widths, "spatial_widths");
    require(first_frame_down >= 1 && height % (1 << first_frame_down) == 0 &&
                width % (1 << first_frame_down) == 0,
            "config: first_frame_down incompatible with frame size");
  }

  bool paper_parity() const {
    int r = ratio();
    int ch = temporal_channels + spatial_channels;
    return (r == 8 || r == 16 || r == 32) && (ch == 4 || ch == 16);
  }
};

// Elements of a raw frame divided by elements of the (T,S) latent pair.
inline double compression_ratio(const ModelConfig& cfg, int h, int w) {
  int r = cfg.ratio();
  double latent = static_cast<double>(cfg.temporal_channels + cfg.spatial_channels) *
                  (h / r) * (w / r);
  return 3.0 * h * w / latent;
}

}  // namespace arvae
