#pragma once

#include <string>
#include <vector>

#include "arvae/model.hpp"

namespace arvae {

// Histogram Shannon entropy over uniform bins on [lo, hi]; outliers clamp
// into the edge bins. A degenerate range yields 0 bits.
template <typename T>
double shannon_entropy(const T* values, std::size_t n, int bins, double lo, double hi) {
  require(bins >= 2, "shannon_entropy: bins must be >= 2");
  require(n > 0, "shannon_entropy: empty input");
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> hist(static_cast<std::size_t>(bins), 0);
  const double scale = bins / (hi - lo);
  for (std::size_t i = 0; i < n; ++i) {
    double v = static_cast<double>(values[i]);
    require(std::isfinite(v), "shannon_entropy: non-finite value");
    int b = static_cast<int>((v - lo) * scale);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++hist[static_cast<std::size_t>(b)];
  }
  double h = 0;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t c : hist) {
    if (c == 0) continue;
    double p = static_cast<double>(c) * inv;
    h -= p * std::log2(p);
  }
  return h;
}

template <typename T>
double shannon_entropy(const Tensor<T>& t, int bins, double lo, double hi) {
  return shannon_entropy(t.data(), t.size(), bins, lo, hi);
}

struct EntropyRow {
  std::string name;
  double bits_per_element = 0;
  std::size_t elements_per_frame = 0;
  double bits_per_frame = 0;  // bits_per_element * elements_per_frame
  double lo = 0, hi = 0;
  int bins = 256;
};

struct EntropyReport {
  std::string dataset_id;
  std::string quantization;
  std::vector<EntropyRow> rows;

  const EntropyRow* find(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return &r;
    return nullptr;
  }
};

// Fixed per-representation quantization ranges. Data-adaptive ranges would
// inflate near-constant signals (a static video's near-zero flow would fill
// the histogram), so the ranges are pinned and documented in the report.
struct EntropyRanges {
  double motion = 8.0;    // pixels, [-motion, motion]
  double residual = 1.0;  // [-1, 1]
  double latent = 4.0;    // [-latent, latent]
  int bins = 256;
};

// Entropy comparison across representations: raw frames, the downsampled
// motion field, the warp residual, and (with a model) the compact latents.
// Without a model the motion field is zero and the reference frame is the
// raw previous frame; with a model both come from the autoregressive
// encoder (estimated flow, reconstructed previous frame).
template <typename T>
EntropyReport entropy_report(VideoAutoencoder<T>* model,
                             const std::vector<Tensor<T>>& clips,
                             const std::string& dataset_id,
                             const EntropyRanges& ranges = {}) {
  require(!clips.empty(), "entropy_report: no clips");
  const int bins = ranges.bins;

  std::vector<T> raw_values, motion_values, residual_values, t_values, s_values;
  std::size_t raw_count = 0, motion_count = 0, residual_count = 0, t_count = 0,
              s_count = 0;

  for (const auto& clip : clips) {
    int frames = clip.dim(0);
    int h = clip.dim(2), w = clip.dim(3);
    require(frames >= 2, "entropy_report: clips need at least 2 frames");
    for (const T& v : clip) raw_values.push_back(v);
    raw_count = static_cast<std::size_t>(3) * h * w;

    EncodedVideo<T> enc;
    if (model) enc = model->encode_video(clip, /*keep_recon=*/true, /*keep_motion=*/true);

    int down = model ? model->cfg.down_exponent : 3;

    Tape<T> tp(false);
    for (int t = 1; t < frames; ++t) {
      Tensor<T> cur(Shape{1, 3, h, w});
      std::memcpy(cur.data(), clip.data() + static_cast<std::size_t>(t) * cur.size(),
                  cur.size() * sizeof(T));
      Tensor<T> prev(Shape{1, 3, h, w});
      if (model) {
        std::memcpy(prev.data(), enc.recon[t - 1].data(), prev.size() * sizeof(T));
      } else {
        std::memcpy(prev.data(), clip.data() + static_cast<std::size_t>(t - 1) * prev.size(),
                    prev.size() * sizeof(T));
      }
      Tensor<T> flow = model ? enc.motion[t - 1].reshaped(Shape{1, 2, h, w})
                             : Tensor<T>(Shape{1, 2, h, w});

      // downsampled motion field at the latent resolution
      Var f = tp.constant(flow);
      for (int i = 0; i < down; ++i) f = avg_pool2(tp, f);
      for (const T& v : tp.val(f)) motion_values.push_back(v);
      motion_count = tp.val(f).size();

      Var res = sub(tp, tp.constant(cur), warp(tp, tp.constant(prev), tp.constant(flow)));
      for (const T& v : tp.val(res)) residual_values.push_back(v);
      residual_count = tp.val(res).size();
    }
    if (model) {
      for (const auto& lt : enc.temporal)
        for (const T& v : lt) t_values.push_back(v);
      for (const auto& ls : enc.spatial)
        for (const T& v : ls) s_values.push_back(v);
      t_count = enc.temporal[0].size();
      s_count = enc.spatial[0].size();
    }
  }

  EntropyReport rep;
  rep.dataset_id = dataset_id;
  {
    std::ostringstream q;
    q << bins << " uniform bins; raw in [0,1], motion in [-" << ranges.motion << ","
      << ranges.motion << "] px, residual in [-" << ranges.residual << ","
      << ranges.residual << "], latents in [-" << ranges.latent << "," << ranges.latent
      << "]; outliers clamped";
    rep.quantization = q.str();
  }
  auto push = [&](const std::string& name, const std::vector<T>& vals,
                  std::size_t per_frame, double lo, double hi) {
    if (vals.empty()) return;
    EntropyRow r;
    r.name = name;
    r.bins = bins;
    r.lo = lo;
    r.hi = hi;
    r.bits_per_element = shannon_entropy(vals.data(), vals.size(), bins, lo, hi);
    r.elements_per_frame = per_frame;
    r.bits_per_frame = r.bits_per_element * static_cast<double>(per_frame);
    rep.rows.push_back(r);
  };
  push("raw_frames", raw_values, raw_count, 0.0, 1.0);
  push("motion_field_ds", motion_values, motion_count, -ranges.motion, ranges.motion);
  push("warp_residual", residual_values, residual_count, -ranges.residual, ranges.residual);
  push("temporal_latent", t_values, t_count, -ranges.latent, ranges.latent);
  push("spatial_latent", s_values, s_count, -ranges.latent, ranges.latent);

  // combined decoupled representation, per-element over motion + residual
  {
    const EntropyRow* m = rep.find("motion_field_ds");
    const EntropyRow* r = rep.find("warp_residual");
    if (m && r) {
      EntropyRow c;
      c.name = "motion_plus_residual";
      c.bins = bins;
      c.elements_per_frame = m->elements_per_frame + r->elements_per_frame;
      c.bits_per_frame = m->bits_per_frame + r->bits_per_frame;
      c.bits_per_element = c.bits_per_frame / static_cast<double>(c.elements_per_frame);
      rep.rows.push_back(c);
    }
  }
  return rep;
}

}  // namespace arvae
