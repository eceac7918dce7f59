#pragma once

#include <string>
#include <vector>

#include "arvae/rng.hpp"
#include "arvae/tensor.hpp"

namespace arvae {

struct Clip {
  Tensor<float> frames;  // (T,3,H,W) in [0,1]
  float fps_hint = 0;    // 0 = unknown
  std::string source_id;
};

// T >= 1, resolution divisible by `divisor`, finite values in [0,1].
inline void check_clip_invariants(const Clip& c, int divisor) {
  require(c.frames.rank() == 4 && c.frames.dim(1) == 3, "clip: want (T,3,H,W), got ",
          c.frames.shape().str());
  require(c.frames.dim(0) >= 1, "clip: empty");
  require(c.frames.dim(2) % divisor == 0 && c.frames.dim(3) % divisor == 0,
          "clip: ", c.frames.dim(2), "x", c.frames.dim(3), " not divisible by ", divisor);
  require(c.frames.all_finite(), "clip: non-finite values");
  require(c.frames.min() >= 0.0f && c.frames.max() <= 1.0f, "clip: values outside [0,1]");
}

// Reads `length` frames starting at `start` from a directory of numbered
// .png/.jpg frames or a raw .rvid file. Frames are scaled (preserving aspect,
// shorter side to cover) and center-cropped to (target_h, target_w).
Clip load_clip(const std::string& path, int start, int length, int target_h,
               int target_w, int divisor = 8);

// frame_0000.png, frame_0001.png, ...
void save_frames_png(const std::string& dir, const Tensor<float>& frames,
                     const std::string& stem = "frame");

// Raw planar video: text header "RVID <w> <h> <frames> <fps>\n" followed by
// frames*3*h*w bytes, frame-major, channel-planar.
void write_rvid(const std::string& path, const Tensor<float>& frames, float fps = 0);

// Middlebury-style .flo (magic PIEH, float32 (u,v) interleaved, row-major).
void write_flo(const std::string& path, const Tensor<float>& flow);
Tensor<float> read_flo(const std::string& path);

void write_mask_png(const std::string& path, const Tensor<std::uint8_t>& mask);

// ---------------------------------------------------------------------------
// curriculum-aware sampling

// Selects stage_len source indices with independent uniform gaps in {1..6}
// (0-5 skipped frames). Infeasible draws retry with a shrinking gap cap; a
// source shorter than stage_len is an error.
inline std::vector<int> sample_skip_indices(int source_len, int stage_len, Rng& rng,
                                            bool allow_skips = true) {
  require(stage_len >= 1, "sampler: stage length must be positive");
  require(source_len >= stage_len, "sampler: insufficient frames (", source_len,
          " < ", stage_len, ")");
  int max_gap = allow_skips ? 6 : 1;
  for (int cap = max_gap; cap >= 1; --cap) {
    std::uniform_int_distribution<int> gap_d(1, cap);
    std::vector<int> gaps;
    int span = 1;
    for (int i = 0; i + 1 < stage_len; ++i) {
      int g = gap_d(rng);
      gaps.push_back(g);
      span += g;
    }
    if (span > source_len) continue;  // retry with smaller skips
    std::uniform_int_distribution<int> start_d(0, source_len - span);
    int pos = start_d(rng);
    std::vector<int> idx{pos};
    for (int g : gaps) idx.push_back(idx.back() + g);
    return idx;
  }
  fail("sampler: unreachable");
}

// In-memory pool of source clips.
struct ClipPool {
  std::vector<Tensor<float>> clips;  // each (T,3,H,W)

  int count() const { return static_cast<int>(clips.size()); }
  int length(int i) const { return clips[i].dim(0); }
};

// Pure function of (pool, stage_len, rng state): picks a source uniformly and
// gathers skip-sampled frames into a (stage_len,3,H,W) tensor.
inline Tensor<float> sample_training_clip(const ClipPool& pool, int stage_len, Rng& rng,
                                          bool allow_skips = true) {
  require(pool.count() > 0, "sampler: empty pool");
  std::uniform_int_distribution<int> pick(0, pool.count() - 1);
  int ci = pick(rng);
  const Tensor<float>& src = pool.clips[ci];
  std::vector<int> idx = sample_skip_indices(src.dim(0), stage_len, rng, allow_skips);
  Tensor<float> out(Shape{stage_len, 3, src.dim(2), src.dim(3)});
  std::size_t n = static_cast<std::size_t>(3) * src.dim(2) * src.dim(3);
  for (int t = 0; t < stage_len; ++t)
    std::memcpy(out.data() + t * n, src.data() + static_cast<std::size_t>(idx[t]) * n,
                n * sizeof(float));
  return out;
}

}  // namespace arvae
