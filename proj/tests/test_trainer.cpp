#include <arvae/runtime.hpp>
#include <arvae/synthetic.hpp>
#include <arvae/trainer.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace arvae;
namespace fs = std::filesystem;

namespace {

ModelConfig miniature_config() {
  // all widths 4, 16x16 frames
  ModelConfig cfg;
  cfg.height = cfg.width = 16;
  cfg.down_exponent = 3;
  cfg.temporal_channels = 2;
  cfg.spatial_channels = 2;
  cfg.state_channels = 4;
  cfg.flow_levels = 2;
  cfg.flow_width = 4;
  cfg.first_frame_width = 4;
  cfg.motion_widths = cfg.image_widths = cfg.fused_widths = cfg.spatial_widths = {4, 4, 4, 4};
  return cfg;
}

std::vector<Tensor<double>> synthetic_frames_double(int frames, int hw, std::uint64_t seed) {
  SyntheticSetSpec set;
  set.height = set.width = hw;
  set.length = frames;
  set.clips = 1;
  set.objects_min = set.objects_max = 1;
  set.size_min = set.size_max = hw / 3;
  set.max_speed = 1;
  set.seed = seed;
  auto clips = render_synthetic_set(set);
  std::vector<Tensor<double>> out;
  std::size_t n = static_cast<std::size_t>(3) * hw * hw;
  for (int t = 0; t < frames; ++t) {
    Tensor<double> f(Shape{1, 3, hw, hw});
    for (std::size_t i = 0; i < n; ++i)
      f[i] = static_cast<double>(clips[0].frames[t * n + i]);
    out.push_back(f);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("stage plans derive the standard supervision split") {
  StagePlan plan = StagePlan::curriculum({{3, 10}, {5, 10}, {7, 10}});
  REQUIRE(plan.stages.size() == 3);
  CHECK(plan.stages[0].sup_lo == 2);
  CHECK(plan.stages[0].sup_hi == 3);
  CHECK(plan.stages[1].sup_lo == 4);  // previously supervised frames excluded
  CHECK(plan.stages[1].sup_hi == 5);
  CHECK(plan.stages[2].sup_lo == 6);
  CHECK(plan.stages[2].sup_hi == 7);
  CHECK_THROWS_AS(StagePlan::curriculum({{5, 10}, {3, 10}}), Error);
}

TEST_CASE("unrolled 3-frame loss gradients match finite differences") {
  // miniature model in double precision, full backpropagation through the
  // autoregressive carry
  ModelConfig cfg = miniature_config();
  VideoAutoencoder<double> model(cfg, 101);
  auto frames = synthetic_frames_double(3, 16, 11);

  // nudge every parameter off its init (zero-initialized flow heads put all
  // warp sampling positions exactly on bilinear kinks, where central
  // differences are meaningless)
  {
    Rng noise(409);
    std::normal_distribution<double> d(0.0, 0.05);
    auto reg = model.params();
    for (auto& [name, p] : reg.items)
      for (double& v : p->value) v += d(noise);
  }

  TrainSettings<double> ts;
  ts.loss.lambda_ssim = 0.5;
  StageSpec stage{3, 1, 2, 3};

  auto build = [&](Tape<double>& tp) {
    Rollout<double> roll = unroll_clip(model, tp, frames);
    return stage_loss(model, tp, roll, stage, ts).total;
  };

  Tape<double> tp;
  Var loss = build(tp);
  double base = tp.scalar(loss);
  CHECK(std::isfinite(base));
  auto reg = model.params();
  for (auto& [name, p] : reg.items) p->zero_grad();
  tp.backward(loss);

  auto eval = [&]() {
    Tape<double> t2(false);
    Rollout<double> roll = unroll_clip(model, t2, frames);
    return t2.scalar(stage_loss(model, t2, roll, stage, ts).total);
  };

  Rng rng(301);
  double worst = 0;
  int checked = 0;
  for (auto& [name, p] : reg.items) {
    if (p->grad.empty()) p->grad = Tensor<double>(p->value.shape());
    auto rep = testsupport::fd_check(eval, p->value, p->grad,
                                     std::min<int>(3, static_cast<int>(p->value.size())),
                                     1e-6, rng);
    worst = std::max(worst, rep.max_rel);
    checked += rep.checked;
  }
  CHECK(checked > 100);
  CHECK(worst < 1e-2);
}

TEST_CASE("carry detach switch controls gradient flow into earlier frames") {
  ModelConfig cfg = miniature_config();
  cfg.first_frame = FirstFrameMode::simple_image_ae;
  auto frames = synthetic_frames_double(3, 16, 13);

  StageSpec stage{3, 1, 3, 3};  // supervise only the last frame
  TrainSettings<double> ts;
  ts.loss.lambda_ssim = 0;
  ts.first_frame_loss_weight = 0;  // isolate the carry path

  auto ae_grad_norm = [&](bool detach) {
    ModelConfig c = cfg;
    c.detach_carry = detach;
    VideoAutoencoder<double> model(c, 103);
    Tape<double> tp;
    Rollout<double> roll = unroll_clip(model, tp, frames);
    Var loss = stage_loss(model, tp, roll, stage, ts).total;
    auto reg = model.params();
    for (auto& [name, p] : reg.items) p->zero_grad();
    tp.backward(loss);
    double norm = 0;
    for (auto& [name, p] : reg.items) {
      if (name.rfind("first_ae", 0) != 0 || p->grad.empty()) continue;
      for (double v : p->grad) norm += v * v;
    }
    return std::sqrt(norm);
  };

  CHECK(ae_grad_norm(false) > 1e-8);  // loss reaches frame 1 through the carry
  CHECK(ae_grad_norm(true) == 0.0);   // detached: the image AE sees nothing
}

TEST_CASE("overfitting a single clip drives the autoregressive path above 35 dB") {
  set_max_threads(2);
  ModelConfig cfg = ModelConfig::desk(16);
  cfg.flow_levels = 2;
  cfg.flow_width = 8;
  cfg.motion_widths = cfg.image_widths = cfg.fused_widths = cfg.spatial_widths = {8, 8, 8, 8};
  cfg.state_channels = 8;
  cfg.first_frame = FirstFrameMode::passthrough;  // isolate frames 2..T
  VideoAutoencoder<float> model(cfg, 105);

  SyntheticSetSpec set;
  set.height = set.width = 16;
  set.length = 3;
  set.clips = 1;
  set.objects_min = set.objects_max = 1;
  set.size_min = set.size_max = 6;
  set.max_speed = 1;
  set.seed = 21;
  auto clip = render_synthetic_set(set)[0].frames;

  ClipPool pool;
  pool.clips.push_back(clip);
  TrainSettings<float> ts;
  ts.batch = 1;
  ts.lr = 5e-3f;
  ts.weight_decay = 0;
  ts.loss.lambda_ssim = 0.1f;
  ts.allow_skips = false;
  ts.val_every = 1000000;
  ts.seed = 5;
  StageSpec stage{3, 1000, 2, 3};
  MetricsLog log;
  Rng rng = named_rng(5, "sampler");
  run_stage(model, stage, pool, {}, ts, 1, rng, log);

  EncodedVideo<float> enc = model.encode_video(clip);
  Tensor<float> recon = model.decode_video(enc);
  PsnrReport r = psnr(clip, recon);
  double later = (r.per_frame[1] + r.per_frame[2]) / 2;
  CHECK(later > 35.0);
}

TEST_CASE("stage training halves the loss on a tiny pool") {
  set_max_threads(2);
  ModelConfig cfg = miniature_config();
  cfg.first_frame = FirstFrameMode::passthrough;
  VideoAutoencoder<float> model(cfg, 107);

  SyntheticSetSpec set;
  set.height = set.width = 16;
  set.length = 8;
  set.clips = 4;
  set.objects_min = set.objects_max = 1;
  set.size_min = 5;
  set.size_max = 7;
  set.max_speed = 1;
  set.seed = 31;
  ClipPool pool;
  for (auto& c : render_synthetic_set(set)) pool.clips.push_back(c.frames);

  TrainSettings<float> ts;
  ts.batch = 2;
  ts.lr = 2e-3f;
  ts.weight_decay = 0;
  ts.seed = 7;
  ts.val_every = 1000000;

  // measure the untrained loss on a fixed batch, train, then re-measure
  Rng fixed = named_rng(7, "probe");
  std::vector<Tensor<float>> probe;
  for (int i = 0; i < 2; ++i) probe.push_back(sample_training_clip(pool, 3, fixed));
  auto frames = train_detail::gather_batch_frames<float>(probe);
  StageSpec stage{3, 120, 2, 3};
  TrainSettings<float> eval_ts = ts;

  auto probe_loss = [&]() {
    Tape<float> tp(false);
    Rollout<float> roll = unroll_clip(model, tp, frames);
    return static_cast<double>(tp.scalar(stage_loss(model, tp, roll, stage, eval_ts).total));
  };
  double before = probe_loss();
  MetricsLog log;
  Rng rng = named_rng(7, "sampler");
  run_stage(model, stage, pool, {}, ts, 1, rng, log);
  double after = probe_loss();
  CHECK(after < 0.5 * before);
}

TEST_CASE("identical seeds give identical losses and metrics logs") {
  set_max_threads(1);  // determinism mode
  auto run_once = [&](const std::string& dir) {
    fs::remove_all(dir);
    ModelConfig cfg = miniature_config();
    VideoAutoencoder<float> model(cfg, 109);
    SyntheticSetSpec set;
    set.height = set.width = 16;
    set.length = 6;
    set.clips = 3;
    set.objects_min = set.objects_max = 1;
    set.size_min = 5;
    set.size_max = 6;
    set.max_speed = 1;
    set.seed = 41;
    ClipPool pool;
    std::vector<Tensor<float>> val;
    for (auto& c : render_synthetic_set(set)) pool.clips.push_back(c.frames);
    val.push_back(pool.clips[0]);

    TrainSettings<float> ts;
    ts.batch = 2;
    ts.lr = 1e-3f;
    ts.seed = 17;
    ts.val_every = 5;
    ts.val_frames = 4;
    ts.out_dir = dir;
    ts.config_json = "{}";
    StagePlan plan = StagePlan::curriculum({{3, 10}, {4, 6}});
    CurriculumResult r = run_curriculum(model, plan, pool, val, ts);
    return r;
  };
  CurriculumResult a = run_once("./trainer_det_a");
  CurriculumResult b = run_once("./trainer_det_b");
  CHECK(a.final_val_psnr == b.final_val_psnr);
  CHECK(read_file("./trainer_det_a/metrics.jsonl") ==
        read_file("./trainer_det_b/metrics.jsonl"));
  CHECK(!read_file("./trainer_det_a/metrics.jsonl").empty());

  // checkpoint round-trip: reload and re-evaluate to the same validation PSNR
  ModelConfig cfg = miniature_config();
  VideoAutoencoder<float> fresh(cfg, 999);
  auto reg = fresh.params();
  load_checkpoint("./trainer_det_a/final.ckpt", reg);
  SyntheticSetSpec set;
  set.height = set.width = 16;
  set.length = 6;
  set.clips = 3;
  set.objects_min = set.objects_max = 1;
  set.size_min = 5;
  set.size_max = 6;
  set.max_speed = 1;
  set.seed = 41;
  auto clips = render_synthetic_set(set);
  std::vector<Tensor<float>> val{clips[0].frames};
  std::vector<double> pf;
  double reloaded = train_detail::validation_psnr(fresh, val, 4, &pf);
  CHECK(reloaded == doctest::Approx(a.final_val_psnr).epsilon(1e-9));
  fs::remove_all("./trainer_det_a");
  fs::remove_all("./trainer_det_b");
  set_max_threads(2);
}

TEST_CASE("non-finite losses abort with a diagnostic snapshot") {
  ModelConfig cfg = miniature_config();
  VideoAutoencoder<float> model(cfg, 111);
  auto reg = model.params();
  reg.items[0].second->value[0] = std::numeric_limits<float>::quiet_NaN();

  SyntheticSetSpec set;
  set.height = set.width = 16;
  set.length = 4;
  set.clips = 1;
  set.objects_min = set.objects_max = 1;
  set.size_min = 5;
  set.size_max = 6;
  set.max_speed = 1;
  set.seed = 51;
  ClipPool pool;
  for (auto& c : render_synthetic_set(set)) pool.clips.push_back(c.frames);

  TrainSettings<float> ts;
  ts.batch = 1;
  ts.seed = 3;
  ts.out_dir = "./trainer_nan_test";
  fs::remove_all(ts.out_dir);
  StageSpec stage{3, 5, 2, 3};
  MetricsLog log;
  Rng rng = named_rng(3, "sampler");
  CHECK_THROWS_WITH_AS(run_stage(model, stage, pool, {}, ts, 1, rng, log),
                       doctest::Contains("non-finite"), Error);
  CHECK(fs::exists("./trainer_nan_test/diagnostic.ckpt"));
  fs::remove_all(ts.out_dir);
}
