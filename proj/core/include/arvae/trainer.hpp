#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "arvae/adamw.hpp"
#include "arvae/checkpoint.hpp"
#include "arvae/losses.hpp"
#include "arvae/metrics.hpp"
#include "arvae/model.hpp"
#include "arvae/parallel.hpp"
#include "arvae/video_io.hpp"

namespace arvae {

struct StageSpec {
  int frames = 3;
  int steps = 500;
  int sup_lo = 2, sup_hi = 3;  // 1-indexed inclusive supervised frame range
};

struct StagePlan {
  std::vector<StageSpec> stages;

  // Curriculum with the standard supervision split: stage 1 supervises
  // frames 2..L1, stage s>1 supervises L_{s-1}+1..L_s (earlier frames are
  // excluded from the loss).
  static StagePlan curriculum(const std::vector<std::pair<int, int>>& frames_steps) {
    StagePlan plan;
    int prev = 1;
    for (auto [frames, steps] : frames_steps) {
      StageSpec s;
      s.frames = frames;
      s.steps = steps;
      s.sup_lo = prev + 1;
      s.sup_hi = frames;
      plan.stages.push_back(s);
      prev = frames;
    }
    plan.validate();
    return plan;
  }

  void validate() const {
    require(!stages.empty(), "stage plan: empty");
    int prev = 0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const StageSpec& s = stages[i];
      require(s.frames > prev, "stage plan: clip lengths must strictly increase");
      require(s.steps >= 1, "stage plan: steps must be positive");
      require(s.sup_lo >= 2 && s.sup_hi <= s.frames && s.sup_lo <= s.sup_hi,
              "stage plan: bad supervised range [", s.sup_lo, ",", s.sup_hi, "]");
      prev = s.frames;
    }
  }
};

template <typename T>
struct TrainSettings {
  int batch = 4;
  T lr = static_cast<T>(1e-3);
  T weight_decay = static_cast<T>(1e-4);
  T grad_clip = 0;
  LossWeights<T> loss;
  T first_frame_loss_weight = 1;
  bool allow_skips = true;  // frame skipping during sampling, all stages
  int val_every = 50;
  std::uint64_t seed = 1;
  std::string out_dir;      // checkpoints + metrics live here when non-empty
  std::string config_json;  // echoed into checkpoints
  int val_frames = 7;       // validation rollout length
  // Data-parallel workers per step. Gradients reduce in a fixed order, so a
  // run reproduces itself for a given worker count; determinism mode pins 1.
  int workers = 2;
};

// Append-only JSONL metrics stream.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::string& path) {
    if (!path.empty()) {
      std::filesystem::path p(path);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      os_.open(path, std::ios::app);
      require(os_.good(), "metrics log: cannot open ", path);
    }
  }

  void record(long step, int stage, double loss, double mse, double ssim_term,
              double psnr_val, const std::vector<double>& per_frame_psnr) {
    if (!os_.is_open()) return;
    os_ << "{\"step\":" << step << ",\"stage\":" << stage;
    auto num = [&](const char* k, double v) {
      os_ << ",\"" << k << "\":" << std::setprecision(10) << v;
    };
    num("loss", loss);
    num("mse", mse);
    num("ssim_term", ssim_term);
    num("psnr_val", psnr_val);
    os_ << ",\"per_frame_psnr\":[";
    for (std::size_t i = 0; i < per_frame_psnr.size(); ++i)
      os_ << (i ? "," : "") << std::setprecision(10) << per_frame_psnr[i];
    os_ << "]}\n";
    os_.flush();
  }

 private:
  std::ofstream os_;
};

// Builds the differentiable unrolled reconstruction of a batch of clips.
// frames[t] are (B,3,H,W) inputs; returns per-frame reconstruction Vars.
template <typename T>
struct Rollout {
  std::vector<Var> inputs;  // graph inputs per frame
  std::vector<Var> recon;   // reconstructions per frame
};

template <typename T>
Rollout<T> unroll_clip(VideoAutoencoder<T>& model, Tape<T>& tp,
                       const std::vector<Tensor<T>>& frames) {
  require(!frames.empty(), "unroll: no frames");
  Rollout<T> r;
  for (const auto& f : frames) r.inputs.push_back(tp.input(f));

  Var x1_hat;
  if (model.cfg.first_frame == FirstFrameMode::passthrough) {
    x1_hat = r.inputs[0];
  } else {
    x1_hat = model.first_ae.decode(tp, model.first_ae.encode(tp, r.inputs[0]));
  }
  r.recon.push_back(x1_hat);

  Var g = model.initial_state_g(tp, frames[0].dim(0));
  Var prev = x1_hat;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    Var prev_in = prev, g_in = g;
    if (model.cfg.detach_carry) {
      prev_in = stopgrad(tp, prev);
      g_in = stopgrad(tp, g);
    }
    auto code = model.encode_frame_g(tp, r.inputs[t], prev_in);
    auto [x_hat, g_t] = model.decode_frame_g(tp, code.temporal, code.spatial, prev_in, g_in);
    r.recon.push_back(x_hat);
    prev = x_hat;
    g = g_t;
  }
  return r;
}

// Composite stage loss: masked reconstruction loss over the supervised range
// plus the first-frame autoencoder's own term (image-AE mode only).
template <typename T>
LossParts<T> stage_loss(VideoAutoencoder<T>& model, Tape<T>& tp, const Rollout<T>& r,
                        const StageSpec& stage, const TrainSettings<T>& cfg) {
  std::vector<Var> x_hat(r.recon.begin() + 1, r.recon.end());
  std::vector<Var> x(r.inputs.begin() + 1, r.inputs.end());
  std::vector<bool> mask;
  for (int t = 2; t <= static_cast<int>(r.recon.size()); ++t)
    mask.push_back(t >= stage.sup_lo && t <= stage.sup_hi);
  LossParts<T> parts = reconstruction_loss_parts(tp, x_hat, x, mask, cfg.loss);
  if (model.cfg.first_frame == FirstFrameMode::simple_image_ae &&
      cfg.first_frame_loss_weight > T(0)) {
    Var d = sub(tp, r.recon[0], r.inputs[0]);
    Var ff = mean_all(tp, mul(tp, d, d));
    parts.total = add(tp, parts.total, mul_scalar(tp, ff, cfg.first_frame_loss_weight));
  }
  return parts;
}

struct StageResult {
  double final_loss = 0;
  double val_psnr = 0;
  std::vector<double> val_per_frame;
  std::string checkpoint;
};

struct CurriculumResult {
  std::vector<double> stage_val_psnr;
  std::string final_checkpoint;
  double final_val_psnr = 0;
};

namespace train_detail {

template <typename T>
std::vector<Tensor<T>> gather_batch_frames(const std::vector<Tensor<T>>& clips) {
  int frames = clips[0].dim(0);
  int b = static_cast<int>(clips.size());
  std::vector<Tensor<T>> out;
  std::size_t n = static_cast<std::size_t>(3) * clips[0].dim(2) * clips[0].dim(3);
  for (int t = 0; t < frames; ++t) {
    Tensor<T> x(Shape{b, 3, clips[0].dim(2), clips[0].dim(3)});
    for (int i = 0; i < b; ++i)
      std::memcpy(x.data() + i * n, clips[i].data() + static_cast<std::size_t>(t) * n,
                  n * sizeof(T));
    out.push_back(std::move(x));
  }
  return out;
}

template <typename T>
double validation_psnr(VideoAutoencoder<T>& model, const std::vector<Tensor<T>>& val,
                       int frames, std::vector<double>* per_frame) {
  auto recon = model.reconstruct(val, frames);
  double mean = 0;
  std::vector<double> pf(frames, 0.0);
  for (std::size_t i = 0; i < val.size(); ++i) {
    Tensor<T> ref(Shape{frames, 3, val[i].dim(2), val[i].dim(3)});
    std::memcpy(ref.data(), val[i].data(), ref.size() * sizeof(T));
    PsnrReport r = psnr(ref, recon[i]);
    mean += r.mean;
    for (int t = 0; t < frames; ++t) pf[t] += r.per_frame[t];
  }
  mean /= static_cast<double>(val.size());
  for (double& v : pf) v /= static_cast<double>(val.size());
  if (per_frame) *per_frame = pf;
  return mean;
}

}  // namespace train_detail

// One optimization stage. The pool provides source sequences; clips of
// stage.frames are drawn per step with frame skipping. Aborts with a
// diagnostic checkpoint on a non-finite loss.
template <typename T>
StageResult run_stage(VideoAutoencoder<T>& model, const StageSpec& stage,
                      const ClipPool& pool, const std::vector<Tensor<T>>& val,
                      const TrainSettings<T>& cfg, int stage_index, Rng& sample_rng,
                      MetricsLog& log) {
  AdamWConfig<T> oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;
  oc.grad_clip = cfg.grad_clip;
  AdamW<T> opt(model.params(), oc);

  namespace fs = std::filesystem;
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

  // Replicas share weight buffers with the live model but own their gradient
  // accumulators, so worker tapes never race; reduction order is fixed.
  const int workers = std::max(1, std::min(cfg.workers, cfg.batch));
  std::vector<std::unique_ptr<VideoAutoencoder<T>>> replicas;
  std::vector<ParamRegistry<T>> replica_regs;
  std::unique_ptr<ThreadTeam> team;
  if (workers > 1) {
    team = std::make_unique<ThreadTeam>(workers);
    for (int w = 0; w < workers; ++w) {
      replicas.push_back(std::make_unique<VideoAutoencoder<T>>(model));
      replica_regs.push_back(replicas.back()->params());
    }
  }
  ParamRegistry<T> main_reg = model.params();

  StageResult result;
  for (int step = 1; step <= stage.steps; ++step) {
    std::vector<Tensor<T>> batch;
    for (int i = 0; i < cfg.batch; ++i) {
      Tensor<float> clip = sample_training_clip(pool, stage.frames, sample_rng, cfg.allow_skips);
      if constexpr (std::is_same_v<T, float>)
        batch.push_back(std::move(clip));
      else
        batch.push_back(clip.template cast<T>());
    }

    double loss = 0, mse = 0, ssim_term = 0;
    opt.zero_grad();
    if (workers == 1) {
      auto frames = train_detail::gather_batch_frames<T>(batch);
      Tape<T> tp;
      Rollout<T> roll = unroll_clip(model, tp, frames);
      LossParts<T> parts = stage_loss(model, tp, roll, stage, cfg);
      loss = tp.scalar(parts.total);
      mse = tp.scalar(parts.mse);
      ssim_term = tp.scalar(parts.ssim_term);
      if (std::isfinite(loss)) tp.backward(parts.total);
    } else {
      std::vector<double> w_loss(workers, 0), w_mse(workers, 0), w_ssim(workers, 0);
      std::vector<std::function<void()>> jobs;
      for (int w = 0; w < workers; ++w) {
        int lo = static_cast<int>(batch.size()) * w / workers;
        int hi = static_cast<int>(batch.size()) * (w + 1) / workers;
        std::vector<Tensor<T>> part(batch.begin() + lo, batch.begin() + hi);
        T weight = static_cast<T>(hi - lo) / static_cast<T>(batch.size());
        VideoAutoencoder<T>* rep = replicas[w].get();
        ParamRegistry<T>* reg = &replica_regs[w];
        jobs.push_back([rep, reg, part = std::move(part), weight, &stage, &cfg,
                        &w_loss, &w_mse, &w_ssim, w] {
          for (auto& [name, p] : reg->items) p->zero_grad();
          auto frames = train_detail::gather_batch_frames<T>(part);
          Tape<T> tp;
          Rollout<T> roll = unroll_clip(*rep, tp, frames);
          LossParts<T> parts = stage_loss(*rep, tp, roll, stage, cfg);
          w_loss[w] = weight * tp.scalar(parts.total);
          w_mse[w] = weight * tp.scalar(parts.mse);
          w_ssim[w] = weight * tp.scalar(parts.ssim_term);
          if (std::isfinite(w_loss[w]))
            tp.backward(mul_scalar(tp, parts.total, weight));
        });
      }
      team->run(std::move(jobs));
      for (int w = 0; w < workers; ++w) {
        loss += w_loss[w];
        mse += w_mse[w];
        ssim_term += w_ssim[w];
        for (std::size_t i = 0; i < main_reg.items.size(); ++i) {
          Tensor<T>& g = replica_regs[w].items[i].second->grad;
          if (!g.empty()) main_reg.items[i].second->grad_buffer().add_(g);
        }
      }
    }

    if (!std::isfinite(loss)) {
      std::string diag;
      if (!cfg.out_dir.empty()) {
        diag = (fs::path(cfg.out_dir) / "diagnostic.ckpt").string();
        save_checkpoint(diag, cfg.config_json, model.params());
      }
      fail("training aborted: non-finite loss at stage ", stage_index, " step ", step,
           diag.empty() ? "" : (" (diagnostic snapshot: " + diag + ")"));
    }

    opt.step();
    result.final_loss = loss;

    if (step % cfg.val_every == 0 || step == stage.steps) {
      double psnr_val = val.empty() ? 0.0
                                    : train_detail::validation_psnr(
                                          model, val, cfg.val_frames, &result.val_per_frame);
      result.val_psnr = psnr_val;
      log.record(step, stage_index, loss, mse, ssim_term, psnr_val, result.val_per_frame);
    }
  }

  if (!cfg.out_dir.empty()) {
    result.checkpoint =
        (fs::path(cfg.out_dir) / ("stage_" + std::to_string(stage_index) + ".ckpt")).string();
    save_checkpoint(result.checkpoint, cfg.config_json, model.params());
  }
  return result;
}

// Runs the stages in order on a shared model, recording per-stage validation
// PSNR (long-horizon improvement across stages is the signature of the
// curriculum).
template <typename T>
CurriculumResult run_curriculum(VideoAutoencoder<T>& model, const StagePlan& plan,
                                const ClipPool& pool, const std::vector<Tensor<T>>& val,
                                const TrainSettings<T>& cfg) {
  plan.validate();
  MetricsLog log(cfg.out_dir.empty() ? std::string()
                                     : cfg.out_dir + "/metrics.jsonl");
  Rng sample_rng = named_rng(cfg.seed, "sampler");
  CurriculumResult result;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    StageResult sr = run_stage(model, plan.stages[s], pool, val, cfg,
                               static_cast<int>(s) + 1, sample_rng, log);
    result.stage_val_psnr.push_back(sr.val_psnr);
    result.final_val_psnr = sr.val_psnr;
  }
  if (!cfg.out_dir.empty()) {
    result.final_checkpoint = cfg.out_dir + "/final.ckpt";
    save_checkpoint(result.final_checkpoint, cfg.config_json, model.params());
  }
  return result;
}

}  // namespace arvae
