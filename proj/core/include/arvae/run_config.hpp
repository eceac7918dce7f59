#pragma once

#include <optional>
#include <string>

#include "arvae/model_config.hpp"
#include "arvae/synthetic.hpp"
#include "arvae/trainer.hpp"

namespace arvae {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" | "frames"
  std::string path;                  // frames: directory of clip directories
  std::string val_path;              // optional extra validation clips
  SyntheticSetSpec synthetic;
};

struct TrainingConfig {
  std::vector<std::pair<int, int>> stages{{3, 600}, {5, 400}, {7, 300}};
  int batch = 4;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double grad_clip = 0;
  double lambda_ssim = 0.5;
  double lambda_perceptual = 0.0;
  double first_frame_loss_weight = 1.0;
  bool skip_frames = true;
  int val_every = 50;
  int val_clips = 16;
  int val_frames = 7;
  int workers = 2;
};

struct IoConfig {
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

struct RunConfig {
  ModelConfig model = ModelConfig::desk(64);
  TrainingConfig training;
  DataConfig data;
  IoConfig io;

  std::uint64_t seed_or_default() const { return io.seed.value_or(1); }
  void validate() const;
};

// Strict JSON schema: unknown keys are rejected, enums validated. "preset"
// in the model section seeds the defaults (desk32, desk64, paper_8x,
// paper_16x, paper_32x) before explicit fields are applied.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fully-resolved echo (what a run actually used).
std::string dump_run_config(const RunConfig& cfg);

}  // namespace arvae
