#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relight/network.hpp"
#include "relight/rng.hpp"

using namespace relight;
using nn::Shape;
using nn::Tensor;

namespace {

nn::NetConfig tiny_config() {
  nn::NetConfig cfg;
  cfg.height = 8;
  cfg.width = 8;
  cfg.levels = 2;
  cfg.base_width = 4;
  cfg.light_latent = 8;
  cfg.light_hidden = 8;
  return cfg;
}

Tensor<double> random_chw(int c, int h, int w, uint64_t seed, double lo = 0, double hi = 1) {
  Rng rng(seed);
  Tensor<double> t(Shape::chw(c, h, w));
  for (double& v : t.v) v = rng.range(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("config validation catches bad dimensions") {
  nn::NetConfig cfg = tiny_config();
  cfg.height = 10;  // not divisible by 2^levels
  CHECK_THROWS_AS(nn::validate(cfg), ValidationError);
  cfg = tiny_config();
  cfg.base_width = 0;
  CHECK_THROWS_AS(nn::validate(cfg), ValidationError);
  cfg = tiny_config();
  cfg.use_depth_input = false;
  cfg.use_semseg_input = false;
  CHECK_THROWS_AS(nn::validate(cfg), ValidationError);
}

TEST_CASE("init is deterministic in the seed and finite") {
  const auto a = nn::init_parameters_f64(tiny_config(), 5);
  const auto b = nn::init_parameters_f64(tiny_config(), 5);
  const auto c = nn::init_parameters_f64(tiny_config(), 6);
  REQUIRE(a.params.tensors.size() == b.params.tensors.size());
  bool identical = true, differs = false;
  for (const auto& [name, t] : a.params.tensors) {
    identical = identical && t.v == b.params.at(name).v;
    differs = differs || t.v != c.params.at(name).v;
    CHECK(t.all_finite());
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("float and double init draw the same underlying values") {
  const auto f = nn::init_parameters(tiny_config(), 9);
  const auto d = nn::init_parameters_f64(tiny_config(), 9);
  const auto& fw = f.params.at("lum.enc0.c.w");
  const auto& dw = d.params.at("lum.enc0.c.w");
  for (size_t i = 0; i < fw.v.size(); ++i) {
    CHECK(fw.v[i] == doctest::Approx(dw.v[i]).epsilon(1e-6));
  }
}

TEST_CASE("light encoder maps zero params to zero latent") {
  auto model = nn::init_parameters_f64(tiny_config(), 1);
  for (auto& [name, t] : model.params.tensors) {
    if (name.rfind("lum.light", 0) == 0) std::fill(t.v.begin(), t.v.end(), 0.0);
  }
  const auto latent = nn::light_encode(model, {0.5, 0.7}, nn::LightEncoder::A);
  for (double v : latent.v) CHECK(v == 0.0);
}

TEST_CASE("light encoder is deterministic and separates inputs") {
  const auto model = nn::init_parameters_f64(tiny_config(), 2);
  const auto a1 = nn::light_encode(model, {-1.0 / 3, 2.0 / 3}, nn::LightEncoder::A);
  const auto a2 = nn::light_encode(model, {-1.0 / 3, 2.0 / 3}, nn::LightEncoder::A);
  CHECK(a1.v == a2.v);

  const auto b = nn::light_encode(model, {0.25, 0.1}, nn::LightEncoder::A);
  CHECK(a1.v != b.v);

  // The two stages own separate encoders.
  const auto other = nn::light_encode(model, {-1.0 / 3, 2.0 / 3}, nn::LightEncoder::B);
  CHECK(a1.v != other.v);
}

TEST_CASE("luminance and chrominance forwards have the contracted shapes") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 3);
  const auto depth = random_chw(1, 8, 8, 10);
  const auto semseg = random_chw(cfg.semantic_classes, 8, 8, 11);
  const auto geometry = nn::geometry_input(depth, semseg, true, true);

  const auto lum = nn::luminance_forward(model, geometry, {0.1, 0.4});
  REQUIRE(lum.shape == Shape::chw(1, 8, 8));
  for (double v : lum.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  const auto chroma = nn::chrominance_forward(model, lum, {0.1, 0.4});
  REQUIRE(chroma.shape == Shape::chw(2, 8, 8));
  for (double v : chroma.v) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  // Dimension mismatch rejected.
  CHECK_THROWS_AS(nn::luminance_forward(model, depth, {0.1, 0.4}), ValidationError);
}

TEST_CASE("forward is deterministic and equals the manual composition") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 4);
  const auto depth = random_chw(1, 8, 8, 12);
  const auto semseg = random_chw(cfg.semantic_classes, 8, 8, 13);
  const auto geometry = nn::geometry_input(depth, semseg, true, true);
  const solar::LightVector v{-0.5, 0.6};

  const auto full = nn::forward(model, geometry, v);
  const auto full2 = nn::forward(model, geometry, v);
  CHECK(full.rgb.data == full2.rgb.data);

  const auto lum = nn::luminance_forward(model, geometry, v);
  const auto chroma = nn::chrominance_forward(model, lum, v);
  CHECK(full.lum.v == lum.v);
  CHECK(full.chroma.v == chroma.v);

  nn::Tensor<double> lab(Shape::chw(3, 8, 8));
  std::copy(lum.v.begin(), lum.v.end(), lab.v.begin());
  std::copy(chroma.v.begin(), chroma.v.end(), lab.v.begin() + 64);
  const auto rgb = nn::lab_to_srgb_norm(nn::make_input(lab)).value();
  const auto img = nn::tensor_to_rgb(rgb);
  CHECK(full.rgb.data == img.data);

  validate(full.rgb);  // clamped into [0,1]
}

TEST_CASE("all-zero inputs still give a finite reproducible raster") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 5);
  const Tensor<double> geometry(Shape::chw(cfg.geometry_channels(), 8, 8));
  const auto out = nn::luminance_forward(model, geometry, {0.0, 0.0});
  CHECK(out.all_finite());
  const auto again = nn::luminance_forward(model, geometry, {0.0, 0.0});
  CHECK(out.v == again.v);
}

TEST_CASE("varying only the light vector changes the output") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 6);
  const auto geometry = nn::geometry_input(random_chw(1, 8, 8, 14),
                                           random_chw(cfg.semantic_classes, 8, 8, 15),
                                           true, true);
  const auto a = nn::luminance_forward(model, geometry, {-0.5, 0.3});
  const auto b = nn::luminance_forward(model, geometry, {0.5, 0.9});
  CHECK(a.v != b.v);
}

TEST_CASE("chrominance loss reaches luminance parameters through the stack") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 7);
  const auto geometry = nn::geometry_input(random_chw(1, 8, 8, 16),
                                           random_chw(cfg.semantic_classes, 8, 8, 17),
                                           true, true);

  nn::Tape<double> tape(model.params, true);
  nn::Var<double> light = nn::make_input(nn::light_to_tensor({0.2, 0.5}));
  nn::Var<double> lum = nn::builder::luminance(tape, cfg, nn::make_input(geometry), light);
  nn::Var<double> chroma = nn::builder::chrominance(tape, cfg, lum, light);
  nn::Var<double> loss =
      nn::mean_sq_diff(chroma, nn::make_input(random_chw(2, 8, 8, 18, -0.5, 0.5)));
  nn::backward(loss);

  const auto grads = tape.grads();
  double lum_grad_norm = 0;
  for (const auto& [name, g] : grads) {
    if (name.rfind("lum.", 0) == 0) {
      for (double v : g.v) lum_grad_norm += v * v;
    }
  }
  CHECK(lum_grad_norm > 0.0);
}

TEST_CASE("zeroing the stack connection isolates chrominance from geometry") {
  const nn::NetConfig cfg = tiny_config();
  const auto model = nn::init_parameters_f64(cfg, 8);
  const solar::LightVector v{0.3, 0.4};
  // Identical zero luminance input, two different geometries: the ab output
  // must depend only on the luminance input fed to the second stage.
  const Tensor<double> zero_lum(Shape::chw(1, 8, 8));
  const auto ab1 = nn::chrominance_forward(model, zero_lum, v);
  const auto ab2 = nn::chrominance_forward(model, zero_lum, v);
  CHECK(ab1.v == ab2.v);
}

TEST_CASE("ablation masks zero the corresponding planes") {
  const auto depth = random_chw(1, 8, 8, 19);
  const auto semseg = random_chw(4, 8, 8, 20);
  const auto both = nn::geometry_input(depth, semseg, true, true);
  const auto no_depth = nn::geometry_input(depth, semseg, false, true);
  const auto no_seg = nn::geometry_input(depth, semseg, true, false);

  for (int i = 0; i < 64; ++i) {
    CHECK(both.v[i] == depth.v[i]);
    CHECK(no_depth.v[i] == 0.0);
    CHECK(no_seg.v[i] == depth.v[i]);
  }
  for (size_t i = 64; i < no_seg.v.size(); ++i) CHECK(no_seg.v[i] == 0.0);
}
