#include "arvae/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "arvae/checkpoint.hpp"
#include "arvae/entropy.hpp"
#include "arvae/metrics.hpp"
#include "arvae/runtime.hpp"
#include "arvae/video_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace arvae {

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  require(os.good(), "cannot write ", path);
  os << text;
}

void echo_config(const RunConfig& cfg) {
  fs::create_directories(cfg.io.out);
  write_text((fs::path(cfg.io.out) / "config.json").string(), dump_run_config(cfg));
}

void apply_determinism(bool deterministic) {
  // GEMMs here are too small to win from Eigen threading; parallelism comes
  // from data-parallel training workers instead
  set_max_threads(1);
}

// Training/eval pools at the model resolution.
std::vector<Tensor<float>> load_dataset(const RunConfig& cfg) {
  std::vector<Tensor<float>> clips;
  if (cfg.data.source == "synthetic") {
    SyntheticSetSpec set = cfg.data.synthetic;
    set.height = cfg.model.height;
    set.width = cfg.model.width;
    for (auto& c : render_synthetic_set(set)) clips.push_back(c.frames);
    return clips;
  }
  require(!cfg.data.path.empty(), "data.path required for source=frames");
  int divisor = 1 << std::max(cfg.model.down_exponent, cfg.model.flow_levels - 1);
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(cfg.data.path))
    if (e.is_directory() || e.path().extension() == ".rvid") entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  if (entries.empty()) entries.push_back(cfg.data.path);  // a single clip
  for (const auto& e : entries) {
    int available = 0;
    if (fs::is_directory(e)) {
      for (const auto& f : fs::directory_iterator(e))
        if (f.is_regular_file()) ++available;
    }
    Clip c = load_clip(e.string(), 0, available > 0 ? available : 1, cfg.model.height,
                       cfg.model.width, divisor);
    clips.push_back(c.frames);
  }
  return clips;
}

std::vector<Tensor<float>> validation_clips(const RunConfig& cfg) {
  SyntheticSetSpec set = cfg.data.synthetic;
  set.height = cfg.model.height;
  set.width = cfg.model.width;
  set.clips = cfg.training.val_clips;
  set.length = std::max(set.length, cfg.training.val_frames);
  set.seed = cfg.data.synthetic.seed + 1000;  // held out from the training pool
  std::vector<Tensor<float>> val;
  for (auto& c : render_synthetic_set(set)) val.push_back(c.frames);
  if (!cfg.data.val_path.empty()) {
    RunConfig vc = cfg;
    vc.data.source = "frames";
    vc.data.path = cfg.data.val_path;
    for (auto& c : load_dataset(vc)) val.push_back(c);
  }
  return val;
}

VideoAutoencoder<float> model_from_checkpoint(const std::string& path,
                                              std::string* config_out = nullptr) {
  std::string config_json = read_checkpoint_config(path);
  RunConfig cfg = parse_run_config(config_json);
  VideoAutoencoder<float> model(cfg.model, 0);
  auto reg = model.params();
  load_checkpoint(path, reg);
  if (config_out) *config_out = config_json;
  return model;
}

}  // namespace

int cmd_synth(const RunConfig& cfg) {
  apply_determinism(cfg.io.deterministic);
  echo_config(cfg);
  SyntheticSetSpec set = cfg.data.synthetic;
  auto clips = render_synthetic_set(set);

  json manifest;
  manifest["canvas"] = {set.height, set.width};
  manifest["frames_per_clip"] = set.length;
  manifest["seed"] = set.seed;
  manifest["clips"] = json::array();
  char name[32];
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::snprintf(name, sizeof(name), "clip_%03zu", i);
    fs::path dir = fs::path(cfg.io.out) / name;
    save_frames_png(dir.string(), clips[i].frames);
    char fname[32];
    for (std::size_t t = 0; t < clips[i].flows.size(); ++t) {
      std::snprintf(fname, sizeof(fname), "flow_%04zu.flo", t);
      write_flo((dir / fname).string(), clips[i].flows[t]);
      std::snprintf(fname, sizeof(fname), "mask_%04zu.png", t);
      write_mask_png((dir / fname).string(), clips[i].valid[t]);
    }
    manifest["clips"].push_back({{"name", name},
                                 {"frames", clips[i].frames.dim(0)},
                                 {"flows", clips[i].flows.size()}});
  }
  write_text((fs::path(cfg.io.out) / "manifest.json").string(), manifest.dump(2));
  std::cout << "synth: wrote " << clips.size() << " clips of " << set.length
            << " frames to " << cfg.io.out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  apply_determinism(cfg.io.deterministic);
  echo_config(cfg);

  ClipPool pool;
  for (auto& c : load_dataset(cfg)) pool.clips.push_back(c);
  require(pool.count() > 0, "train: empty dataset");
  auto val = validation_clips(cfg);

  VideoAutoencoder<float> model(cfg.model, cfg.seed_or_default());
  std::cout << "train: model with " << model.param_count() << " parameters, "
            << pool.count() << " training clips, " << val.size() << " validation clips\n";

  TrainSettings<float> ts;
  ts.batch = cfg.training.batch;
  ts.lr = static_cast<float>(cfg.training.lr);
  ts.weight_decay = static_cast<float>(cfg.training.weight_decay);
  ts.grad_clip = static_cast<float>(cfg.training.grad_clip);
  ts.loss.lambda_ssim = static_cast<float>(cfg.training.lambda_ssim);
  ts.loss.lambda_perceptual = static_cast<float>(cfg.training.lambda_perceptual);
  ts.first_frame_loss_weight = static_cast<float>(cfg.training.first_frame_loss_weight);
  ts.allow_skips = cfg.training.skip_frames;
  ts.val_every = cfg.training.val_every;
  ts.val_frames = cfg.training.val_frames;
  ts.seed = cfg.seed_or_default();
  ts.out_dir = cfg.io.out;
  ts.config_json = dump_run_config(cfg);
  ts.workers = cfg.io.deterministic ? 1 : cfg.training.workers;

  StagePlan plan = StagePlan::curriculum(cfg.training.stages);
  CurriculumResult result = run_curriculum(model, plan, pool, val, ts);
  for (std::size_t s = 0; s < result.stage_val_psnr.size(); ++s)
    std::cout << "train: stage " << s + 1 << " validation PSNR "
              << result.stage_val_psnr[s] << " dB\n";
  std::cout << "train: final checkpoint " << result.final_checkpoint << "\n";
  return 0;
}

int cmd_reconstruct(const ReconstructOptions& opt) {
  apply_determinism(opt.deterministic);
  std::string config_json;
  VideoAutoencoder<float> model = model_from_checkpoint(opt.checkpoint, &config_json);
  int divisor = 1 << std::max(model.cfg.down_exponent, model.cfg.flow_levels - 1);

  int frames = opt.frames;
  if (frames <= 0) {
    // probe available frames by loading one at a time is wasteful; directories
    // report their file count, rvid its header
    frames = 0;
    if (fs::is_directory(opt.input)) {
      for (const auto& f : fs::directory_iterator(opt.input))
        if (f.is_regular_file()) ++frames;
    } else {
      std::ifstream is(opt.input);
      std::string magic;
      int w, h, t;
      is >> magic >> w >> h >> t;
      frames = t;
    }
  }
  Clip clip = load_clip(opt.input, 0, frames, model.cfg.height, model.cfg.width, divisor);

  EncodedVideo<float> enc = model.encode_video(clip.frames);
  Tensor<float> recon = model.decode_video(enc);
  PsnrReport rep = psnr(clip.frames, recon);

  fs::create_directories(opt.out);
  write_text((fs::path(opt.out) / "config.json").string(), config_json);
  write_rvid((fs::path(opt.out) / "reconstruction.rvid").string(), recon, clip.fps_hint);

  json table;
  table["frames"] = frames;
  table["mean_psnr"] = rep.mean;
  table["per_frame_psnr"] = rep.per_frame;
  write_text((fs::path(opt.out) / "psnr.json").string(), table.dump(2));

  if (opt.dump_frames) {
    // side-by-side: original | reconstruction
    Tensor<float> pair(Shape{frames, 3, model.cfg.height, 2 * model.cfg.width});
    for (int t = 0; t < frames; ++t)
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < model.cfg.height; ++y)
          for (int x = 0; x < model.cfg.width; ++x) {
            pair.at(t, c, y, x) = clip.frames.at(t, c, y, x);
            pair.at(t, c, y, x + model.cfg.width) = recon.at(t, c, y, x);
          }
    save_frames_png((fs::path(opt.out) / "frames").string(), pair, "pair");
  }

  std::printf("reconstruct: %d frames, mean PSNR %.2f dB\n", frames, rep.mean);
  std::printf("%6s %10s\n", "frame", "psnr_db");
  for (int t = 0; t < frames; ++t) std::printf("%6d %10.3f\n", t + 1, rep.per_frame[t]);
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
  apply_determinism(cfg.io.deterministic);
  VideoAutoencoder<float> model = model_from_checkpoint(checkpoint);
  auto clips = load_dataset(cfg);
  require(!clips.empty(), "eval: empty dataset");

  json rows = json::array();
  double mean_psnr = 0, mean_ssim = 0;
  std::printf("%6s %10s %10s %12s\n", "clip", "psnr_db", "ssim", "perceptual");
  for (std::size_t i = 0; i < clips.size(); ++i) {
    EncodedVideo<float> enc = model.encode_video(clips[i]);
    Tensor<float> recon = model.decode_video(enc);
    PsnrReport rep = psnr(clips[i], recon);
    double s = 0;
    for (int t = 0; t < clips[i].dim(0); ++t)
      s += ssim(slice_sample(clips[i], t), slice_sample(recon, t));
    s /= clips[i].dim(0);
    mean_psnr += rep.mean;
    mean_ssim += s;
    std::printf("%6zu %10.3f %10.4f %12s\n", i, rep.mean, s, "n/a");
    rows.push_back({{"clip", i}, {"psnr", rep.mean}, {"ssim", s}, {"perceptual", nullptr}});
  }
  mean_psnr /= static_cast<double>(clips.size());
  mean_ssim /= static_cast<double>(clips.size());
  std::printf("%6s %10.3f %10.4f %12s\n", "mean", mean_psnr, mean_ssim, "n/a");

  echo_config(cfg);
  json out{{"clips", rows}, {"mean_psnr", mean_psnr}, {"mean_ssim", mean_ssim}};
  write_text((fs::path(cfg.io.out) / "eval.json").string(), out.dump(2));
  return 0;
}

int cmd_entropy(const RunConfig& cfg, const std::string& checkpoint) {
  apply_determinism(cfg.io.deterministic);
  auto clips = load_dataset(cfg);
  require(!clips.empty(), "entropy: empty dataset");

  EntropyReport rep;
  if (checkpoint.empty()) {
    rep = entropy_report<float>(nullptr, clips, cfg.data.source);
  } else {
    VideoAutoencoder<float> model = model_from_checkpoint(checkpoint);
    rep = entropy_report<float>(&model, clips, cfg.data.source);
  }

  std::printf("dataset: %s\nquantization: %s\n", rep.dataset_id.c_str(),
              rep.quantization.c_str());
  std::printf("%-22s %16s %18s %16s\n", "representation", "bits_per_elem",
              "elems_per_frame", "bits_per_frame");
  json rows = json::array();
  for (const auto& r : rep.rows) {
    std::printf("%-22s %16.4f %18zu %16.1f\n", r.name.c_str(), r.bits_per_element,
                r.elements_per_frame, r.bits_per_frame);
    rows.push_back({{"name", r.name},
                    {"bits_per_element", r.bits_per_element},
                    {"elements_per_frame", r.elements_per_frame},
                    {"bits_per_frame", r.bits_per_frame},
                    {"range", {r.lo, r.hi}},
                    {"bins", r.bins}});
  }
  echo_config(cfg);
  json out{{"dataset", rep.dataset_id}, {"quantization", rep.quantization}, {"rows", rows}};
  write_text((fs::path(cfg.io.out) / "entropy.json").string(), out.dump(2));
  return 0;
}

}  // namespace arvae
