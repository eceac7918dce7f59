#pragma once

#include <optional>

#include "arvae/frame_ae.hpp"
#include "arvae/motion.hpp"
#include "arvae/spatial.hpp"
#include "arvae/temporal.hpp"

namespace arvae {

// Per-clip latent bundle: one first-frame code plus (temporal, spatial)
// latent pairs for frames 2..T.
template <typename T>
struct EncodedVideo {
  bool passthrough_first = false;
  Tensor<T> first;  // image-AE latent, or the raw first frame in passthrough mode
  std::vector<Tensor<T>> temporal;
  std::vector<Tensor<T>> spatial;
  // Optional caches filled during encoding (the encoder runs the decoder
  // anyway to obtain its conditioning frame).
  std::vector<Tensor<T>> recon;
  std::vector<Tensor<T>> motion;

  int frame_count() const { return static_cast<int>(temporal.size()) + 1; }
};

template <typename T>
struct VideoAutoencoder {
  ModelConfig cfg;
  MotionEstimator<T> motion;
  TemporalEncoder<T> temporal_enc;
  TemporalDecoder<T> temporal_dec;
  SpatialEncoder<T> spatial_enc;
  SpatialDecoder<T> spatial_dec;
  FrameAutoencoder<T> first_ae;

  explicit VideoAutoencoder(ModelConfig c, std::uint64_t seed = 0x5eed) : cfg(std::move(c)) {
    cfg.validate();
    Rng rng = named_rng(seed, "model_init");
    motion = MotionEstimator<T>(cfg, rng);
    temporal_enc = TemporalEncoder<T>(cfg, rng);
    temporal_dec = TemporalDecoder<T>(cfg, rng);
    spatial_enc = SpatialEncoder<T>(cfg, rng);
    spatial_dec = SpatialDecoder<T>(cfg, rng);
    first_ae = FrameAutoencoder<T>(cfg, rng);
  }

  ParamRegistry<T> params() {
    ParamRegistry<T> r;
    motion.reg(r, "motion");
    temporal_enc.reg(r, "temporal_enc");
    temporal_dec.reg(r, "temporal_dec");
    spatial_enc.reg(r, "spatial_enc");
    spatial_dec.reg(r, "spatial_dec");
    if (cfg.first_frame == FirstFrameMode::simple_image_ae) first_ae.reg(r, "first_ae");
    return r;
  }

  std::size_t param_count() { return params().count(); }

  // ---- graph-building API (batched tensors, differentiable) ----

  struct FrameCode {
    Var temporal, spatial;
    Var motion_field;
  };

  FrameCode encode_frame_g(Tape<T>& tp, Var x_t, Var x_prev_hat) {
    Var m = motion(tp, x_t, x_prev_hat);
    auto [latent, p_e] = temporal_enc(tp, m, x_prev_hat);
    Var s = spatial_enc(tp, p_e, x_t);
    return {latent, s, m};
  }

  std::pair<Var, Var> decode_frame_g(Tape<T>& tp, Var latent_t, Var latent_s,
                                     Var x_prev_hat, Var g_prev) {
    auto p_d = temporal_dec(tp, latent_t, x_prev_hat);
    return spatial_dec(tp, latent_s, p_d, g_prev);
  }

  Var initial_state_g(Tape<T>& tp, int batch) {
    return tp.constant(Tensor<T>(Shape{batch, cfg.state_channels, cfg.height, cfg.width}));
  }

  // ---- inference over plain tensors (one tape per frame) ----

  // clip: (T,3,H,W). Interleaves decoding, since frame t+1 is encoded against
  // the reconstruction of frame t.
  EncodedVideo<T> encode_video(const Tensor<T>& clip, bool keep_recon = false,
                               bool keep_motion = false) {
    check_clip(clip);
    int frames = clip.dim(0);
    EncodedVideo<T> enc;
    enc.passthrough_first = cfg.first_frame == FirstFrameMode::passthrough;

    Tensor<T> x1 = frame_batch1(clip, 0);
    Tensor<T> prev_hat;
    if (enc.passthrough_first) {
      enc.first = slice_sample(x1, 0);
      prev_hat = x1;
    } else {
      Tape<T> tp(false);
      Var z = first_ae.encode(tp, tp.constant(x1));
      Var x_hat = first_ae.decode(tp, z);
      enc.first = slice_sample(tp.val(z), 0);
      prev_hat = tp.val(x_hat);
    }
    if (keep_recon) enc.recon.push_back(slice_sample(prev_hat, 0));

    Tensor<T> g(Shape{1, cfg.state_channels, cfg.height, cfg.width});
    for (int t = 1; t < frames; ++t) {
      Tape<T> tp(false);
      Var x_t = tp.constant(frame_batch1(clip, t));
      Var x_prev = tp.constant(prev_hat);
      Var g_prev = tp.constant(g);
      FrameCode code = encode_frame_g(tp, x_t, x_prev);
      auto [x_hat, g_t] = decode_frame_g(tp, code.temporal, code.spatial, x_prev, g_prev);
      enc.temporal.push_back(slice_sample(tp.val(code.temporal), 0));
      enc.spatial.push_back(slice_sample(tp.val(code.spatial), 0));
      if (keep_motion) enc.motion.push_back(slice_sample(tp.val(code.motion_field), 0));
      if (keep_recon) enc.recon.push_back(slice_sample(tp.val(x_hat), 0));
      prev_hat = tp.val(x_hat);
      g = tp.val(g_t);
    }
    return enc;
  }

  // Reconstruct a clip from its latents. zero_state suppresses the recurrent
  // carry at every step (ablation hook).
  Tensor<T> decode_video(const EncodedVideo<T>& enc, bool zero_state = false) {
    int frames = enc.frame_count();
    Tensor<T> out(Shape{frames, 3, cfg.height, cfg.width});
    Tensor<T> prev_hat;
    if (enc.passthrough_first) {
      prev_hat = enc.first.reshaped(Shape{1, 3, cfg.height, cfg.width}).clone();
    } else {
      Tape<T> tp(false);
      Var x_hat = first_ae.decode(
          tp, tp.constant(enc.first.reshaped(Shape{1, enc.first.dim(0), enc.first.dim(1),
                                                   enc.first.dim(2)})));
      prev_hat = tp.val(x_hat);
    }
    copy_frame(out, 0, prev_hat);

    Tensor<T> g(Shape{1, cfg.state_channels, cfg.height, cfg.width});
    for (int t = 1; t < frames; ++t) {
      Tape<T> tp(false);
      Var lt = tp.constant(batch1(enc.temporal[t - 1]));
      Var ls = tp.constant(batch1(enc.spatial[t - 1]));
      Var x_prev = tp.constant(prev_hat);
      if (zero_state) g.zero();
      Var g_prev = tp.constant(g);
      auto [x_hat, g_t] = decode_frame_g(tp, lt, ls, x_prev, g_prev);
      prev_hat = tp.val(x_hat);
      g = tp.val(g_t);
      copy_frame(out, t, prev_hat);
    }
    return out;
  }

  // Batched reconstruction of same-length clips; used by validation loops.
  // Returns one (T,3,H,W) tensor per clip.
  std::vector<Tensor<T>> reconstruct(const std::vector<Tensor<T>>& clips,
                                     int frame_limit = -1, bool zero_state = false) {
    require(!clips.empty(), "reconstruct: no clips");
    int frames = frame_limit > 0 ? frame_limit : clips[0].dim(0);
    int b = static_cast<int>(clips.size());
    for (const auto& c : clips) {
      check_clip(c);
      require(c.dim(0) >= frames, "reconstruct: clip shorter than requested length");
    }

    std::vector<Tensor<T>> out;
    for (int i = 0; i < b; ++i) out.emplace_back(Shape{frames, 3, cfg.height, cfg.width});

    Tensor<T> x1 = gather_frames(clips, 0, b);
    Tensor<T> prev_hat;
    if (cfg.first_frame == FirstFrameMode::passthrough) {
      prev_hat = x1;
    } else {
      Tape<T> tp(false);
      Var x_hat = first_ae.decode(tp, first_ae.encode(tp, tp.constant(x1)));
      prev_hat = tp.val(x_hat);
    }
    scatter_frame(out, 0, prev_hat);

    Tensor<T> g(Shape{b, cfg.state_channels, cfg.height, cfg.width});
    for (int t = 1; t < frames; ++t) {
      Tape<T> tp(false);
      Var x_t = tp.constant(gather_frames(clips, t, b));
      Var x_prev = tp.constant(prev_hat);
      if (zero_state) g.zero();
      Var g_prev = tp.constant(g);
      FrameCode code = encode_frame_g(tp, x_t, x_prev);
      auto [x_hat, g_t] = decode_frame_g(tp, code.temporal, code.spatial, x_prev, g_prev);
      prev_hat = tp.val(x_hat);
      g = tp.val(g_t);
      scatter_frame(out, t, prev_hat);
    }
    return out;
  }

 private:
  void check_clip(const Tensor<T>& clip) const {
    require(clip.rank() == 4 && clip.dim(1) == 3, "clip must be (T,3,H,W), got ",
            clip.shape().str());
    require(clip.dim(0) >= 1, "clip must hold at least one frame");
    require(clip.dim(2) == cfg.height && clip.dim(3) == cfg.width, "clip resolution ",
            clip.dim(2), "x", clip.dim(3), " does not match config ", cfg.height, "x",
            cfg.width);
  }

  static Tensor<T> frame_batch1(const Tensor<T>& clip, int t) {
    Tensor<T> f(Shape{1, clip.dim(1), clip.dim(2), clip.dim(3)});
    std::size_t n = f.size();
    std::memcpy(f.data(), clip.data() + static_cast<std::size_t>(t) * n, n * sizeof(T));
    return f;
  }
  static Tensor<T> batch1(const Tensor<T>& x) {
    return x.reshaped(Shape{1, x.dim(0), x.dim(1), x.dim(2)});
  }
  static void copy_frame(Tensor<T>& clip, int t, const Tensor<T>& frame_b1) {
    std::size_t n = frame_b1.size();
    std::memcpy(clip.data() + static_cast<std::size_t>(t) * n, frame_b1.data(),
                n * sizeof(T));
  }
  static Tensor<T> gather_frames(const std::vector<Tensor<T>>& clips, int t, int b) {
    const Tensor<T>& c0 = clips[0];
    Tensor<T> x(Shape{b, c0.dim(1), c0.dim(2), c0.dim(3)});
    std::size_t n = static_cast<std::size_t>(c0.dim(1)) * c0.dim(2) * c0.dim(3);
    for (int i = 0; i < b; ++i)
      std::memcpy(x.data() + i * n, clips[i].data() + static_cast<std::size_t>(t) * n,
                  n * sizeof(T));
    return x;
  }
  static void scatter_frame(std::vector<Tensor<T>>& out, int t, const Tensor<T>& x) {
    std::size_t n = x.size() / out.size();
    for (std::size_t i = 0; i < out.size(); ++i)
      std::memcpy(out[i].data() + static_cast<std::size_t>(t) * n, x.data() + i * n,
                  n * sizeof(T));
  }
};

}  // namespace arvae
