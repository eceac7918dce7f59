#include <arvae/metrics.hpp>
#include <arvae/ops.hpp>
#include <arvae/synthetic.hpp>

#include <set>

#include "support.hpp"

using namespace arvae;

namespace {

// warp oracle: warping frame t by the ground-truth flow must reproduce
// frame t+1 on valid pixels
void check_warp_oracle(const SyntheticClip& clip, double tol) {
  int frames = clip.frames.dim(0);
  int h = clip.frames.dim(2), w = clip.frames.dim(3);
  Tape<float> tp(false);
  for (int t = 0; t + 1 < frames; ++t) {
    Tensor<float> src(Shape{1, 3, h, w});
    std::memcpy(src.data(), clip.frames.data() + static_cast<std::size_t>(t) * src.size(),
                src.size() * sizeof(float));
    Var warped = warp(tp, tp.constant(src),
                      tp.constant(clip.flows[t].reshaped(Shape{1, 2, h, w})));
    const Tensor<float>& out = tp.val(warped);
    double max_err = 0;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          if (!clip.valid[t].at(0, y, x)) continue;
          double err = std::abs(out.at(0, c, y, x) -
                                clip.frames.at(t + 1, c, y, x));
          max_err = std::max(max_err, err);
        }
    CHECK(max_err <= tol);
  }
}

}  // namespace

TEST_CASE("static object yields identically zero flow") {
  SyntheticSpec spec;
  spec.height = spec.width = 32;
  spec.length = 3;
  SyntheticObject o;
  o.width = o.height = 10;
  o.x0 = o.y0 = 8;
  o.vx = o.vy = 0;
  spec.objects.push_back(o);
  auto clip = render_synthetic(spec);
  for (const auto& f : clip.flows)
    for (float v : f) CHECK(v == 0.0f);
  // and frames are identical
  for (std::size_t i = 0; i < clip.frames.size() / 3; ++i)
    CHECK(clip.frames[i] == clip.frames[i + clip.frames.size() / 3]);
}

TEST_CASE("integer translation: flow magnitude and exact warp oracle") {
  SyntheticSpec spec;
  spec.height = spec.width = 48;
  spec.length = 4;
  SyntheticObject o;
  o.width = o.height = 12;
  o.x0 = 6;
  o.y0 = 20;
  o.vx = 3;
  o.vy = 0;
  o.texture_seed = 9;
  spec.objects.push_back(o);
  auto clip = render_synthetic(spec);

  // the object's support carries -velocity (source offset), background is 0
  int on_object = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      float fx = clip.flows[0].at(0, y, x);
      float fy = clip.flows[0].at(1, y, x);
      if (fx != 0.0f || fy != 0.0f) {
        CHECK(fx == -3.0f);
        CHECK(fy == 0.0f);
        ++on_object;
      }
    }
  CHECK(on_object == 12 * 12);
  check_warp_oracle(clip, 0.0);  // integer velocities reproduce exactly
}

TEST_CASE("two objects with distinct velocities give piecewise-constant flow") {
  SyntheticSpec spec;
  spec.height = spec.width = 64;
  spec.length = 3;
  SyntheticObject a;
  a.width = a.height = 14;
  a.x0 = 4;
  a.y0 = 6;
  a.vx = 2;
  a.vy = 1;
  a.texture_seed = 1;
  SyntheticObject b;
  b.kind = SyntheticObject::Kind::circle;
  b.width = b.height = 16;
  b.x0 = 40;
  b.y0 = 40;
  b.vx = -1;
  b.vy = -2;
  b.texture_seed = 2;
  spec.objects.push_back(a);
  spec.objects.push_back(b);
  auto clip = render_synthetic(spec);

  std::set<std::pair<float, float>> distinct;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      distinct.insert({clip.flows[0].at(0, y, x), clip.flows[0].at(1, y, x)});
  CHECK(distinct.size() == 3);  // background + two object velocities
  CHECK(distinct.count({0.0f, 0.0f}) == 1);
  CHECK(distinct.count({-2.0f, -1.0f}) == 1);
  CHECK(distinct.count({1.0f, 2.0f}) == 1);
  check_warp_oracle(clip, 0.0);
}

TEST_CASE("subpixel velocities reproduce within interpolation tolerance") {
  SyntheticSpec spec;
  spec.height = spec.width = 48;
  spec.length = 3;
  spec.texture_smoothing = 4;
  SyntheticObject o;
  o.width = o.height = 14;
  o.x0 = 10;
  o.y0 = 10;
  o.vx = 1.5;
  o.vy = 0.5;
  o.texture_seed = 5;
  spec.objects.push_back(o);
  auto clip = render_synthetic(spec);
  check_warp_oracle(clip, 0.08);
}

TEST_CASE("renderer rejects objects that exit the canvas") {
  SyntheticSpec spec;
  spec.height = spec.width = 32;
  spec.length = 8;
  SyntheticObject o;
  o.width = o.height = 10;
  o.x0 = 20;
  o.y0 = 10;
  o.vx = 3;  // exits on the right
  spec.objects.push_back(o);
  CHECK_THROWS_AS(render_synthetic(spec), Error);
}

TEST_CASE("synthetic sets are deterministic and in-bounds") {
  SyntheticSetSpec set;
  set.height = set.width = 32;
  set.length = 10;
  set.clips = 4;
  set.size_min = 8;
  set.size_max = 12;
  set.max_speed = 2;
  set.seed = 77;
  auto a = render_synthetic_set(set);
  auto b = render_synthetic_set(set);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].frames.size() == b[i].frames.size());
    for (std::size_t j = 0; j < a[i].frames.size(); ++j)
      CHECK(a[i].frames[j] == b[i].frames[j]);
    CHECK(a[i].frames.min() >= 0.0f);
    CHECK(a[i].frames.max() <= 1.0f);
    CHECK(a[i].frames.all_finite());
    check_warp_oracle(a[i], 0.0);
  }
}
