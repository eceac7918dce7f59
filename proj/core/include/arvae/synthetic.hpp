#pragma once

#include <cstdint>
#include <vector>

#include "arvae/rng.hpp"
#include "arvae/tensor.hpp"

namespace arvae {

// Procedural clips with exact dense ground-truth flow, used as oracle data
// for warp and motion tests and as desk-scale training material. Textures are
// band-limited (blurred value noise) so that bilinear transport is accurate
// and disoccluded content stays compressible.

struct SyntheticObject {
  enum class Kind { rect, circle };
  Kind kind = Kind::rect;
  int width = 16, height = 16;  // bounding box; circles use the min dimension
  double x0 = 0, y0 = 0;        // top-left corner at t = 0
  double vx = 0, vy = 0;        // screen-space velocity, pixels per frame
  std::uint64_t texture_seed = 0;
};

struct SyntheticSpec {
  int height = 64, width = 64;
  int length = 7;
  std::uint64_t background_seed = 1;
  int texture_smoothing = 3;      // blur passes; higher = smoother content
  double texture_contrast = 0.9;  // occupied value range around 0.5
  std::vector<SyntheticObject> objects;
};

struct SyntheticClip {
  Tensor<float> frames;  // (T,3,H,W) in [0,1]
  // flows[t] maps frame t+1 pixels to their source in frame t (the field a
  // backward warp consumes): object support carries -velocity, background 0.
  std::vector<Tensor<float>> flows;  // (2,H,W)
  // valid[t] marks pixels whose source is visible in frame t; warping frame t
  // by flows[t] reproduces frame t+1 exactly there (integer velocities).
  std::vector<Tensor<std::uint8_t>> valid;  // (1,H,W)
};

namespace synth_detail {

// Blurred value noise in [0.5 - c/2, 0.5 + c/2], 3 channels.
inline Tensor<float> noise_texture(int h, int w, std::uint64_t seed, int passes,
                                   double contrast) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 12345);
  Tensor<float> t(Shape{3, h, w});
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (float& v : t) v = d(rng);
  Tensor<float> tmp(Shape{3, h, w});
  for (int p = 0; p < passes; ++p) {
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          float acc = 0;
          int n = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              int yy = y + dy, xx = x + dx;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              acc += t.at(c, yy, xx);
              ++n;
            }
          tmp.at(c, y, x) = acc / n;
        }
    std::swap(t, tmp);
  }
  float lo = t.min(), hi = t.max();
  float span = hi - lo < 1e-6f ? 1.0f : hi - lo;
  for (float& v : t)
    v = static_cast<float>(0.5 + contrast * ((v - lo) / span - 0.5));
  return t;
}

}  // namespace synth_detail

inline SyntheticClip render_synthetic(const SyntheticSpec& spec) {
  require(spec.length >= 2, "synthetic: length must be >= 2");
  require(spec.height > 0 && spec.width > 0, "synthetic: empty canvas");
  const int h = spec.height, w = spec.width, frames = spec.length;

  // bounds: every object must stay inside the canvas over the whole clip
  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    const auto& o = spec.objects[k];
    for (int t = 0; t < frames; ++t) {
      double x = o.x0 + o.vx * t, y = o.y0 + o.vy * t;
      require(x >= 0 && y >= 0 && x + o.width <= w && y + o.height <= h,
              "synthetic: object ", k, " exits the canvas at frame ", t);
    }
  }

  Tensor<float> background =
      synth_detail::noise_texture(h, w, spec.background_seed, spec.texture_smoothing,
                                  spec.texture_contrast);
  std::vector<Tensor<float>> textures;
  for (const auto& o : spec.objects)
    textures.push_back(synth_detail::noise_texture(
        o.height, o.width, o.texture_seed + 17, spec.texture_smoothing,
        spec.texture_contrast));

  SyntheticClip clip;
  clip.frames = Tensor<float>(Shape{frames, 3, h, w});

  // layer[t](y,x): 0 background, k+1 for object k (later objects on top)
  std::vector<Tensor<std::uint8_t>> layers;

  for (int t = 0; t < frames; ++t) {
    Tensor<std::uint8_t> layer(Shape{1, h, w});
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          clip.frames.at(t, c, y, x) = background.at(c, y, x);

    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const auto& o = spec.objects[k];
      const Tensor<float>& tex = textures[k];
      double px = o.x0 + o.vx * t, py = o.y0 + o.vy * t;
      bool integer = px == std::floor(px) && py == std::floor(py);
      double cx = (o.width - 1) / 2.0, cy = (o.height - 1) / 2.0;
      double r2 = std::min(o.width, o.height) * std::min(o.width, o.height) / 4.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double ty = y - py, tx = x - px;
          if (ty < 0 || tx < 0 || ty > o.height - 1 || tx > o.width - 1) continue;
          if (o.kind == SyntheticObject::Kind::circle &&
              (ty - cy) * (ty - cy) + (tx - cx) * (tx - cx) > r2)
            continue;
          layer.at(0, y, x) = static_cast<std::uint8_t>(k + 1);
          if (integer) {
            for (int c = 0; c < 3; ++c)
              clip.frames.at(t, c, y, x) =
                  tex.at(c, static_cast<int>(ty), static_cast<int>(tx));
          } else {
            int yy0 = static_cast<int>(std::floor(ty));
            int xx0 = static_cast<int>(std::floor(tx));
            int yy1 = std::min(yy0 + 1, o.height - 1);
            int xx1 = std::min(xx0 + 1, o.width - 1);
            double wy = ty - yy0, wx = tx - xx0;
            for (int c = 0; c < 3; ++c) {
              double v = (1 - wy) * ((1 - wx) * tex.at(c, yy0, xx0) + wx * tex.at(c, yy0, xx1)) +
                         wy * ((1 - wx) * tex.at(c, yy1, xx0) + wx * tex.at(c, yy1, xx1));
              clip.frames.at(t, c, y, x) = static_cast<float>(v);
            }
          }
        }
    }
    layers.push_back(std::move(layer));
  }

  // backward flow + visibility between consecutive frames
  for (int t = 0; t + 1 < frames; ++t) {
    Tensor<float> flow(Shape{2, h, w});
    Tensor<std::uint8_t> valid(Shape{1, h, w});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int who = layers[t + 1].at(0, y, x);
        double fx = 0, fy = 0;
        if (who > 0) {
          fx = -spec.objects[who - 1].vx;
          fy = -spec.objects[who - 1].vy;
        }
        flow.at(0, y, x) = static_cast<float>(fx);
        flow.at(1, y, x) = static_cast<float>(fy);
        double sx = x + fx, sy = y + fy;
        bool ok = sx >= 0 && sy >= 0 && sx <= w - 1 && sy <= h - 1;
        if (ok) {
          // all bilinear source neighbors must belong to the same layer
          int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
          int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
          ok = layers[t].at(0, y0, x0) == who && layers[t].at(0, y0, x1) == who &&
               layers[t].at(0, y1, x0) == who && layers[t].at(0, y1, x1) == who;
        }
        valid.at(0, y, x) = ok ? 1 : 0;
      }
    clip.flows.push_back(std::move(flow));
    clip.valid.push_back(std::move(valid));
  }
  return clip;
}

// A randomized family of clips for training/validation pools. Velocities are
// integers; start positions are solved so trajectories stay inside.
struct SyntheticSetSpec {
  int height = 64, width = 64;
  int length = 7;
  int clips = 8;
  int objects_min = 1, objects_max = 2;
  int size_min = 12, size_max = 24;
  int max_speed = 3;
  int texture_smoothing = 3;
  double texture_contrast = 0.9;
  std::uint64_t seed = 1;
};

inline std::vector<SyntheticClip> render_synthetic_set(const SyntheticSetSpec& set) {
  std::vector<SyntheticClip> out;
  Rng rng = named_rng(set.seed, "synthetic_set");
  std::uniform_int_distribution<int> count_d(set.objects_min, set.objects_max);
  std::uniform_int_distribution<int> size_d(set.size_min, set.size_max);
  std::uniform_int_distribution<int> speed_d(-set.max_speed, set.max_speed);
  std::uniform_int_distribution<int> kind_d(0, 1);
  for (int i = 0; i < set.clips; ++i) {
    SyntheticSpec spec;
    spec.height = set.height;
    spec.width = set.width;
    spec.length = set.length;
    spec.texture_smoothing = set.texture_smoothing;
    spec.texture_contrast = set.texture_contrast;
    spec.background_seed = rng();
    int n = count_d(rng);
    for (int k = 0; k < n; ++k) {
      SyntheticObject o;
      o.kind = kind_d(rng) ? SyntheticObject::Kind::circle : SyntheticObject::Kind::rect;
      o.width = size_d(rng);
      o.height = size_d(rng);
      o.texture_seed = rng();
      // velocity first, then a feasible start window
      for (int attempt = 0;; ++attempt) {
        o.vx = speed_d(rng);
        o.vy = speed_d(rng);
        double travel_x = o.vx * (set.length - 1), travel_y = o.vy * (set.length - 1);
        double lo_x = std::max(0.0, -travel_x), hi_x = set.width - o.width - std::max(0.0, travel_x);
        double lo_y = std::max(0.0, -travel_y), hi_y = set.height - o.height - std::max(0.0, travel_y);
        if (hi_x >= lo_x && hi_y >= lo_y) {
          std::uniform_int_distribution<int> sx(static_cast<int>(lo_x), static_cast<int>(hi_x));
          std::uniform_int_distribution<int> sy(static_cast<int>(lo_y), static_cast<int>(hi_y));
          o.x0 = sx(rng);
          o.y0 = sy(rng);
          break;
        }
        require(attempt < 64, "synthetic set: cannot place object (canvas too small)");
      }
      spec.objects.push_back(o);
    }
    out.push_back(render_synthetic(spec));
  }
  return out;
}

}  // namespace arvae
