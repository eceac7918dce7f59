#include "arvae/run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace arvae {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  require(obj.is_object(), "config: ", where, " must be an object");
  for (const auto& [key, value] : obj.items())
    require(allowed.count(key) == 1, "config: unknown key \"", key, "\" in ", where);
}

template <class V>
void get_to(const json& obj, const char* key, V& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, {"preset", "height", "width", "down_exponent", "temporal_channels",
                 "spatial_channels", "state_channels", "pyramid_widths",
                 "motion_widths", "image_widths", "fused_widths", "spatial_widths",
                 "flow_levels", "flow_width", "multi_scale", "detach_carry",
                 "first_frame_mode", "activation", "first_frame_channels",
                 "first_frame_down", "first_frame_width"},
             "model");
  if (j.contains("preset")) {
    std::string p = j.at("preset");
    if (p == "desk32")
      m = ModelConfig::desk(32);
    else if (p == "desk64")
      m = ModelConfig::desk(64);
    else if (p == "paper_8x")
      m = ModelConfig::paper_variant(3);
    else if (p == "paper_16x")
      m = ModelConfig::paper_variant(4);
    else if (p == "paper_32x")
      m = ModelConfig::paper_variant(5);
    else
      fail("config: unknown model preset \"", p, "\"");
  }
  get_to(j, "height", m.height);
  get_to(j, "width", m.width);
  if (j.contains("down_exponent")) {
    j.at("down_exponent").get_to(m.down_exponent);
    if (!j.contains("pyramid_widths") && !j.contains("motion_widths"))
      m.apply_default_widths(m.height >= 256 ? 1 : 2);
  }
  get_to(j, "temporal_channels", m.temporal_channels);
  get_to(j, "spatial_channels", m.spatial_channels);
  get_to(j, "state_channels", m.state_channels);
  if (j.contains("pyramid_widths")) {
    std::vector<int> w = j.at("pyramid_widths").get<std::vector<int>>();
    m.motion_widths = m.image_widths = m.fused_widths = m.spatial_widths = w;
  }
  get_to(j, "motion_widths", m.motion_widths);
  get_to(j, "image_widths", m.image_widths);
  get_to(j, "fused_widths", m.fused_widths);
  get_to(j, "spatial_widths", m.spatial_widths);
  get_to(j, "flow_levels", m.flow_levels);
  get_to(j, "flow_width", m.flow_width);
  get_to(j, "multi_scale", m.multi_scale);
  get_to(j, "detach_carry", m.detach_carry);
  if (j.contains("first_frame_mode")) {
    std::string v = j.at("first_frame_mode");
    if (v == "simple_image_ae")
      m.first_frame = FirstFrameMode::simple_image_ae;
    else if (v == "passthrough")
      m.first_frame = FirstFrameMode::passthrough;
    else
      fail("config: first_frame_mode must be simple_image_ae or passthrough");
  }
  if (j.contains("activation")) {
    std::string v = j.at("activation");
    if (v == "leaky_relu")
      m.activation = Act::leaky_relu;
    else if (v == "relu")
      m.activation = Act::relu;
    else
      fail("config: activation must be leaky_relu or relu");
  }
  get_to(j, "first_frame_channels", m.first_frame_channels);
  get_to(j, "first_frame_down", m.first_frame_down);
  get_to(j, "first_frame_width", m.first_frame_width);
}

void parse_synthetic(const json& j, SyntheticSetSpec& s) {
  check_keys(j, {"height", "width", "length", "clips", "objects_min", "objects_max",
                 "size_min", "size_max", "max_speed", "texture_smoothing",
                 "texture_contrast", "seed"},
             "data.synthetic");
  get_to(j, "height", s.height);
  get_to(j, "width", s.width);
  get_to(j, "length", s.length);
  get_to(j, "clips", s.clips);
  get_to(j, "objects_min", s.objects_min);
  get_to(j, "objects_max", s.objects_max);
  get_to(j, "size_min", s.size_min);
  get_to(j, "size_max", s.size_max);
  get_to(j, "max_speed", s.max_speed);
  get_to(j, "texture_smoothing", s.texture_smoothing);
  get_to(j, "texture_contrast", s.texture_contrast);
  get_to(j, "seed", s.seed);
}

void parse_data(const json& j, DataConfig& d) {
  check_keys(j, {"source", "path", "val_path", "synthetic"}, "data");
  get_to(j, "source", d.source);
  require(d.source == "synthetic" || d.source == "frames",
          "config: data.source must be synthetic or frames");
  get_to(j, "path", d.path);
  get_to(j, "val_path", d.val_path);
  if (j.contains("synthetic")) parse_synthetic(j.at("synthetic"), d.synthetic);
}

void parse_training(const json& j, TrainingConfig& t) {
  check_keys(j, {"stages", "batch", "lr", "weight_decay", "grad_clip", "lambda_ssim",
                 "lambda_perceptual", "first_frame_loss_weight", "skip_frames",
                 "val_every", "val_clips", "val_frames", "workers"},
             "training");
  if (j.contains("stages")) {
    t.stages.clear();
    for (const auto& s : j.at("stages")) {
      check_keys(s, {"frames", "steps"}, "training.stages[]");
      t.stages.emplace_back(s.at("frames").get<int>(), s.at("steps").get<int>());
    }
  }
  get_to(j, "batch", t.batch);
  get_to(j, "lr", t.lr);
  get_to(j, "weight_decay", t.weight_decay);
  get_to(j, "grad_clip", t.grad_clip);
  get_to(j, "lambda_ssim", t.lambda_ssim);
  get_to(j, "lambda_perceptual", t.lambda_perceptual);
  get_to(j, "first_frame_loss_weight", t.first_frame_loss_weight);
  get_to(j, "skip_frames", t.skip_frames);
  get_to(j, "val_every", t.val_every);
  get_to(j, "val_clips", t.val_clips);
  get_to(j, "val_frames", t.val_frames);
  get_to(j, "workers", t.workers);
}

void parse_io(const json& j, IoConfig& io) {
  check_keys(j, {"out", "seed", "deterministic"}, "io");
  get_to(j, "out", io.out);
  if (j.contains("seed")) io.seed = j.at("seed").get<std::uint64_t>();
  get_to(j, "deterministic", io.deterministic);
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  require(!io.deterministic || io.seed.has_value(),
          "config: a seed is mandatory when io.deterministic is set");
  require(training.batch >= 1, "config: training.batch must be >= 1");
  require(!training.stages.empty(), "config: training.stages must not be empty");
  StagePlan::curriculum(training.stages);  // validates monotone lengths
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("config: invalid JSON: ", e.what());
  }
  check_keys(j, {"model", "training", "data", "io"}, "top level");
  RunConfig cfg;
  if (j.contains("model")) parse_model(j.at("model"), cfg.model);
  if (j.contains("training")) parse_training(j.at("training"), cfg.training);
  if (j.contains("data")) parse_data(j.at("data"), cfg.data);
  if (j.contains("io")) parse_io(j.at("io"), cfg.io);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "config: cannot open ", path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_run_config(os.str());
}

std::string dump_run_config(const RunConfig& cfg) {
  json m{
      {"height", cfg.model.height},
      {"width", cfg.model.width},
      {"down_exponent", cfg.model.down_exponent},
      {"temporal_channels", cfg.model.temporal_channels},
      {"spatial_channels", cfg.model.spatial_channels},
      {"state_channels", cfg.model.state_channels},
      {"motion_widths", cfg.model.motion_widths},
      {"image_widths", cfg.model.image_widths},
      {"fused_widths", cfg.model.fused_widths},
      {"spatial_widths", cfg.model.spatial_widths},
      {"flow_levels", cfg.model.flow_levels},
      {"flow_width", cfg.model.flow_width},
      {"multi_scale", cfg.model.multi_scale},
      {"detach_carry", cfg.model.detach_carry},
      {"first_frame_mode", cfg.model.first_frame == FirstFrameMode::passthrough
                               ? "passthrough"
                               : "simple_image_ae"},
      {"activation", cfg.model.activation == Act::relu ? "relu" : "leaky_relu"},
      {"first_frame_channels", cfg.model.first_frame_channels},
      {"first_frame_down", cfg.model.first_frame_down},
      {"first_frame_width", cfg.model.first_frame_width},
  };
  json stages = json::array();
  for (auto [frames, steps] : cfg.training.stages)
    stages.push_back({{"frames", frames}, {"steps", steps}});
  json t{
      {"stages", stages},
      {"batch", cfg.training.batch},
      {"lr", cfg.training.lr},
      {"weight_decay", cfg.training.weight_decay},
      {"grad_clip", cfg.training.grad_clip},
      {"lambda_ssim", cfg.training.lambda_ssim},
      {"lambda_perceptual", cfg.training.lambda_perceptual},
      {"first_frame_loss_weight", cfg.training.first_frame_loss_weight},
      {"skip_frames", cfg.training.skip_frames},
      {"val_every", cfg.training.val_every},
      {"val_clips", cfg.training.val_clips},
      {"val_frames", cfg.training.val_frames},
      {"workers", cfg.training.workers},
  };
  json s{
      {"height", cfg.data.synthetic.height},
      {"width", cfg.data.synthetic.width},
      {"length", cfg.data.synthetic.length},
      {"clips", cfg.data.synthetic.clips},
      {"objects_min", cfg.data.synthetic.objects_min},
      {"objects_max", cfg.data.synthetic.objects_max},
      {"size_min", cfg.data.synthetic.size_min},
      {"size_max", cfg.data.synthetic.size_max},
      {"max_speed", cfg.data.synthetic.max_speed},
      {"texture_smoothing", cfg.data.synthetic.texture_smoothing},
      {"texture_contrast", cfg.data.synthetic.texture_contrast},
      {"seed", cfg.data.synthetic.seed},
  };
  json d{{"source", cfg.data.source}, {"path", cfg.data.path},
         {"val_path", cfg.data.val_path}, {"synthetic", s}};
  json io{{"out", cfg.io.out}, {"deterministic", cfg.io.deterministic}};
  if (cfg.io.seed) io["seed"] = *cfg.io.seed;
  json root{{"model", m}, {"training", t}, {"data", d}, {"io", io}};
  return root.dump(2);
}

}  // namespace arvae
