#include <arvae/run_config.hpp>

#include "support.hpp"

using namespace arvae;

TEST_CASE("full config parses and round-trips through the resolved dump") {
  std::string text = R"({
    "model": {"preset": "desk32", "spatial_channels": 6, "multi_scale": false},
    "training": {"stages": [{"frames": 3, "steps": 10}, {"frames": 5, "steps": 5}],
                 "batch": 2, "lr": 0.002, "lambda_ssim": 0.25},
    "data": {"source": "synthetic", "synthetic": {"height": 32, "width": 32, "clips": 4, "seed": 9}},
    "io": {"out": "runs/x", "seed": 5, "deterministic": true}
  })";
  RunConfig cfg = parse_run_config(text);
  CHECK(cfg.model.height == 32);
  CHECK(cfg.model.spatial_channels == 6);
  CHECK(cfg.model.multi_scale == false);
  CHECK(cfg.training.stages.size() == 2);
  CHECK(cfg.training.lr == 0.002);
  CHECK(cfg.data.synthetic.clips == 4);
  CHECK(cfg.io.seed.value() == 5);
  CHECK(cfg.io.deterministic);

  RunConfig again = parse_run_config(dump_run_config(cfg));
  CHECK(again.model.spatial_channels == 6);
  CHECK(again.model.multi_scale == false);
  CHECK(again.training.lambda_ssim == 0.25);
  CHECK(again.io.seed.value() == 5);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"modle": {}})"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"model": {"hieght": 32}})"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"training": {"learning_rate": 0.1}})"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"data": {"synthetic": {"velocity": 1}}})"),
                       doctest::Contains("unknown key"), Error);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"io": {"output": "x"}})"),
                       doctest::Contains("unknown key"), Error);
}

TEST_CASE("a seed is mandatory in determinism mode") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"io": {"deterministic": true}})"),
                       doctest::Contains("seed is mandatory"), Error);
  CHECK_NOTHROW(parse_run_config(R"({"io": {"deterministic": true, "seed": 1}})"));
}

TEST_CASE("presets pin the reference geometries") {
  RunConfig c8 = parse_run_config(R"({"model": {"preset": "paper_8x"}})");
  CHECK(c8.model.height == 256);
  CHECK(c8.model.down_exponent == 3);
  CHECK(c8.model.temporal_channels + c8.model.spatial_channels == 4);
  RunConfig c16 = parse_run_config(R"({"model": {"preset": "paper_16x"}})");
  CHECK(c16.model.down_exponent == 4);
  CHECK(c16.model.temporal_channels + c16.model.spatial_channels == 16);
  RunConfig c32 = parse_run_config(R"({"model": {"preset": "paper_32x"}})");
  CHECK(c32.model.down_exponent == 5);
  CHECK(compression_ratio(c32.model, 256, 256) == doctest::Approx(192.0));
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"model": {"preset": "desk128"}})"),
                       doctest::Contains("unknown model preset"), Error);
}

TEST_CASE("malformed JSON and bad stage plans fail cleanly") {
  CHECK_THROWS_WITH_AS(parse_run_config("{nope"), doctest::Contains("invalid JSON"), Error);
  CHECK_THROWS_AS(
      parse_run_config(R"({"training": {"stages": [{"frames": 5, "steps": 1}, {"frames": 3, "steps": 1}]}})"),
      Error);
}
