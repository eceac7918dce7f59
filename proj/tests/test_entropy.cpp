#include <arvae/entropy.hpp>
#include <arvae/synthetic.hpp>

#include "support.hpp"

using namespace arvae;

TEST_CASE("constant data has zero entropy") {
  Tensor<float> t = Tensor<float>::full(Shape{1000}, 0.37f);
  CHECK(shannon_entropy(t, 256, 0.0, 1.0) == 0.0);
}

TEST_CASE("exactly uniform occupancy over 256 bins gives 8 bits") {
  std::vector<double> vals;
  for (int b = 0; b < 256; ++b)
    vals.push_back((b + 0.5) / 256.0);  // one value per bin center
  CHECK(shannon_entropy(vals.data(), vals.size(), 256, 0.0, 1.0) ==
        doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("iid uniform samples approach 8 bits (law of large numbers)") {
  Rng rng(55);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> vals(1000000);
  for (double& v : vals) v = d(rng);
  double h = shannon_entropy(vals.data(), vals.size(), 256, 0.0, 1.0);
  CHECK(std::abs(h - 8.0) < 0.01);
}

TEST_CASE("entropy is invariant under bijective bin relabeling") {
  Rng rng(56);
  std::normal_distribution<double> d(0.0, 0.3);
  std::vector<double> vals(20000);
  for (double& v : vals) v = d(rng);
  double h = shannon_entropy(vals.data(), vals.size(), 128, -1.0, 1.0);
  // mirroring the range permutes the bins without merging any
  std::vector<double> mirrored;
  for (double v : vals) mirrored.push_back(-v);
  double hm = shannon_entropy(mirrored.data(), mirrored.size(), 128, -1.0, 1.0);
  CHECK(h == doctest::Approx(hm).epsilon(1e-12));
}

TEST_CASE("entropy is monotone non-decreasing in nested bin counts") {
  Rng rng(57);
  std::normal_distribution<double> d(0.5, 0.2);
  std::vector<double> vals(50000);
  for (double& v : vals) v = d(rng);
  double h64 = shannon_entropy(vals.data(), vals.size(), 64, 0.0, 1.0);
  double h128 = shannon_entropy(vals.data(), vals.size(), 128, 0.0, 1.0);
  double h256 = shannon_entropy(vals.data(), vals.size(), 256, 0.0, 1.0);
  CHECK(h64 <= h128 + 1e-12);
  CHECK(h128 <= h256 + 1e-12);
}

TEST_CASE("degenerate ranges and bad bins") {
  Tensor<float> t = Tensor<float>::full(Shape{16}, 1.0f);
  CHECK(shannon_entropy(t, 256, 2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(shannon_entropy(t, 1, 0.0, 1.0), Error);
}

TEST_CASE("static video: motion and residual entropy vanish without a model") {
  // all frames equal; the report's no-model path uses zero flow and the raw
  // previous frame, so residuals are exactly zero
  SyntheticSpec spec;
  spec.height = spec.width = 32;
  spec.length = 4;
  SyntheticObject o;
  o.width = o.height = 12;
  o.x0 = o.y0 = 10;
  spec.objects.push_back(o);
  auto clip = render_synthetic(spec);

  EntropyReport rep = entropy_report<float>(nullptr, {clip.frames}, "static");
  const EntropyRow* raw = rep.find("raw_frames");
  const EntropyRow* motion = rep.find("motion_field_ds");
  const EntropyRow* residual = rep.find("warp_residual");
  REQUIRE(raw);
  REQUIRE(motion);
  REQUIRE(residual);
  CHECK(raw->bits_per_element > 0.5);
  CHECK(motion->bits_per_element == 0.0);
  CHECK(residual->bits_per_element == 0.0);
  // element counts reflect the shapes: motion at the latent grid, residual full-res
  CHECK(motion->elements_per_frame == 2u * 4 * 4);
  CHECK(residual->elements_per_frame == 3u * 32 * 32);
  CHECK(raw->elements_per_frame == 3u * 32 * 32);
}

TEST_CASE("combined row pools bits over motion and residual") {
  SyntheticSetSpec set;
  set.height = set.width = 32;
  set.length = 4;
  set.clips = 2;
  set.size_min = 8;
  set.size_max = 10;
  set.max_speed = 1;
  set.seed = 3;
  auto clips = render_synthetic_set(set);
  std::vector<Tensor<float>> frames;
  for (auto& c : clips) frames.push_back(c.frames);
  EntropyReport rep = entropy_report<float>(nullptr, frames, "set");
  const EntropyRow* m = rep.find("motion_field_ds");
  const EntropyRow* r = rep.find("warp_residual");
  const EntropyRow* c = rep.find("motion_plus_residual");
  REQUIRE(c);
  CHECK(c->elements_per_frame == m->elements_per_frame + r->elements_per_frame);
  CHECK(c->bits_per_frame == doctest::Approx(m->bits_per_frame + r->bits_per_frame));
}
