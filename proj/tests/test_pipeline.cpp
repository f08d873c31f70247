#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "relight/pipeline.hpp"
#include "relight/rng.hpp"

using namespace relight;

namespace {

// Small-but-real setup: 16x16 renders of procedural scenes.
constexpr int kSize = 16;

nn::NetConfig small_net() {
  nn::NetConfig cfg;
  cfg.height = kSize;
  cfg.width = kSize;
  cfg.levels = 2;
  cfg.base_width = 6;
  cfg.light_latent = 8;
  cfg.light_hidden = 8;
  return cfg;
}

nn::SunEstConfig small_sun() {
  nn::SunEstConfig cfg;
  cfg.height = kSize;
  cfg.width = kSize;
  cfg.widths = {6, 8, 10, 12};
  cfg.fc_hidden = 8;
  return cfg;
}

template <typename T>
std::vector<train::TrainingSample<T>> make_samples(int scenes, int positions,
                                                   uint64_t seed) {
  std::vector<train::TrainingSample<T>> out;
  const auto& grid = solar::default_positions();
  for (int s = 0; s < scenes; ++s) {
    const auto spec = scene::make_random_scene(split_seed(seed, s));
    for (int p = 0; p < positions; ++p) {
      scene::LightSpec light;
      light.sun = grid[p % grid.size()];
      const auto tuple = scene::render(spec, light, kSize, kSize);
      auto sample = train::make_sample<T>(tuple, scene::kNumClasses, scene::kDepthSentinel);
      sample.scene_id = "scene" + std::to_string(s);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

template <typename T>
uint64_t param_checksum(const nn::ParamStore<T>& params) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, t] : params.tensors) {
    for (T v : t.v) {
      uint64_t bits;
      if constexpr (std::is_same_v<T, float>) {
        uint32_t b32;
        std::memcpy(&b32, &v, 4);
        bits = b32;
      } else {
        std::memcpy(&bits, &v, 8);
      }
      h = (h ^ bits) * 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace

TEST_CASE("adam drives a quadratic to its minimum") {
  nn::ParamStore<double> params;
  params.tensors.emplace("x", nn::Tensor<double>::scalar(0.0));
  train::Optim<double> opt(train::Optimizer::Adam, 0.1);
  for (int i = 0; i < 800; ++i) {
    std::map<std::string, nn::Tensor<double>> grads;
    grads.emplace("x", nn::Tensor<double>::scalar(2 * (params.at("x").v[0] - 3.0)));
    opt.step(params, grads);
  }
  CHECK(params.at("x").v[0] == doctest::Approx(3.0).epsilon(1e-3));

  nn::ParamStore<double> p2;
  p2.tensors.emplace("x", nn::Tensor<double>::scalar(0.0));
  train::Optim<double> sgd(train::Optimizer::Sgd, 0.1);
  for (int i = 0; i < 200; ++i) {
    std::map<std::string, nn::Tensor<double>> grads;
    grads.emplace("x", nn::Tensor<double>::scalar(2 * (p2.at("x").v[0] - 3.0)));
    sgd.step(p2, grads);
  }
  CHECK(p2.at("x").v[0] == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("train config invariants are enforced") {
  train::TrainConfig cfg;
  cfg.learning_rate = 0;
  CHECK_THROWS_AS(train::validate(cfg), ValidationError);
  cfg = {};
  cfg.epochs = 0;
  CHECK_THROWS_AS(train::validate(cfg), ValidationError);
  cfg = {};
  cfg.use_depth_input = false;
  cfg.use_semseg_input = false;
  CHECK_THROWS_AS(train::validate(cfg), ValidationError);
  CHECK_THROWS_AS(
      train::train_sunest<float>({}, train::sunest_defaults(), small_sun(), nullptr),
      ValidationError);
}

TEST_CASE("sunest single-batch overfit drops the loss by 10x") {
  const auto samples = make_samples<float>(1, 4, 100);
  train::TrainConfig cfg = train::sunest_defaults();
  cfg.epochs = 200;  // 4 samples per epoch in one batch: 200 steps
  cfg.batch_size = 4;
  cfg.learning_rate = 2e-3;
  cfg.threads = 2;
  std::vector<double> losses;
  train::train_sunest<float>(samples, cfg, small_sun(),
                             [&](const train::TrainLogEntry& e) {
                               losses.push_back(e.losses.total);
                             });
  REQUIRE(losses.size() >= 10);
  CHECK(losses.back() < losses.front() / 10.0);
}

TEST_CASE("shadow transfer single-batch overfit drops the loss by 10x") {
  const auto samples = make_samples<float>(1, 4, 200);
  train::TrainConfig cfg = train::shadow_transfer_defaults();
  cfg.epochs = 120;
  cfg.batch_size = 4;
  cfg.learning_rate = 2e-3;
  cfg.threads = 2;
  const auto sunest = nn::init_sunest(small_sun(), 1);
  std::vector<double> losses;
  train::train_shadow_transfer<float>(samples, sunest, cfg, small_net(),
                                      [&](const train::TrainLogEntry& e) {
                                        losses.push_back(e.losses.total);
                                      });
  REQUIRE(losses.size() == 120);
  CHECK(losses.back() < losses.front() / 10.0);
}

TEST_CASE("sunest parameters are bit-identical across shadow transfer training") {
  const auto samples = make_samples<float>(2, 3, 300);
  const auto sunest = nn::init_sunest(small_sun(), 2);
  const uint64_t before = param_checksum(sunest.params);
  train::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.threads = 2;
  train::train_shadow_transfer<float>(samples, sunest, cfg, small_net(), nullptr);
  CHECK(param_checksum(sunest.params) == before);
}

TEST_CASE("deterministic reruns produce bit-identical models") {
  const auto samples = make_samples<float>(2, 3, 400);
  const auto sunest = nn::init_sunest(small_sun(), 3);
  train::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.seed = 55;

  cfg.threads = 1;
  const auto m1 = train::train_shadow_transfer<float>(samples, sunest, cfg, small_net());
  cfg.threads = 2;  // thread count must not change the result
  const auto m2 = train::train_shadow_transfer<float>(samples, sunest, cfg, small_net());
  CHECK(param_checksum(m1.params) == param_checksum(m2.params));

  cfg.seed = 56;
  const auto m3 = train::train_shadow_transfer<float>(samples, sunest, cfg, small_net());
  CHECK(param_checksum(m3.params) != param_checksum(m1.params));
}

TEST_CASE("disabling the sunest loss zeroes its report column") {
  const auto samples = make_samples<float>(1, 3, 500);
  const auto sunest = nn::init_sunest(small_sun(), 4);
  train::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 3;
  cfg.use_sunest_loss = false;
  cfg.threads = 2;
  std::vector<nn::LossReport> reports;
  train::train_shadow_transfer<float>(samples, sunest, cfg, small_net(),
                                      [&](const train::TrainLogEntry& e) {
                                        reports.push_back(e.losses);
                                      });
  REQUIRE(!reports.empty());
  for (const auto& r : reports) {
    CHECK(r.sunest == 0.0);
    CHECK(r.total == doctest::Approx(r.l1_l + r.l1_ab + r.perceptual + r.style));
  }
}

TEST_CASE("ablation masks are stamped into the trained model config") {
  const auto samples = make_samples<float>(1, 2, 600);
  const auto sunest = nn::init_sunest(small_sun(), 5);
  train::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.use_semseg_input = false;  // depth-only row
  const auto model = train::train_shadow_transfer<float>(samples, sunest, cfg, small_net());
  CHECK(model.config.use_depth_input);
  CHECK_FALSE(model.config.use_semseg_input);
}

TEST_CASE("smoothed early training loss is non-increasing") {
  const auto samples = make_samples<float>(4, 4, 700);
  const auto sunest = nn::init_sunest(small_sun(), 6);
  train::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-3;
  cfg.threads = 2;
  std::vector<double> losses;
  train::train_shadow_transfer<float>(samples, sunest, cfg, small_net(),
                                      [&](const train::TrainLogEntry& e) {
                                        losses.push_back(e.losses.total);
                                      });
  // Window-10 moving average, sampled at window strides.
  REQUIRE(losses.size() >= 20);
  std::vector<double> smooth;
  for (size_t i = 0; i + 10 <= losses.size(); i += 10) {
    double acc = 0;
    for (size_t j = i; j < i + 10; ++j) acc += losses[j];
    smooth.push_back(acc / 10);
  }
  for (size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] <= smooth[i - 1] * 1.02);
}

TEST_CASE("relight rejects below-horizon targets and is deterministic") {
  const auto samples = make_samples<float>(1, 2, 800);
  const auto sunest = nn::init_sunest(small_sun(), 7);
  train::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  const auto model = train::train_shadow_transfer<float>(samples, sunest, cfg, small_net());

  const auto& s = samples[0];
  CHECK_THROWS_AS(train::relight(model, s.depth, s.semseg, {0.0, 95.0}), ValidationError);

  const RgbImage a = train::relight(model, s.depth, s.semseg, {-60.0, 60.0});
  const RgbImage b = train::relight(model, s.depth, s.semseg, {-60.0, 60.0});
  CHECK(a.data == b.data);
  CHECK(a.height == kSize);
  validate(a);
}

TEST_CASE("csv logger writes line-oriented records") {
  std::ostringstream out;
  auto log = train::make_csv_logger(out);
  train::TrainLogEntry e;
  e.step = 3;
  e.epoch = 1;
  e.losses = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.96875};
  log(e);
  const std::string text = out.str();
  CHECK(text.find("step,epoch,l1_l,l1_ab,perceptual,style,sunest,total\n") == 0);
  CHECK(text.find("3,1,0.5,0.25,0.125,0.0625,0.03125,0.96875\n") != std::string::npos);
}

TEST_CASE("below-horizon tuples are excluded at load time") {
  scene::RenderedTuple t;
  t.height = kSize;
  t.width = kSize;
  t.rgb = RgbImage(kSize, kSize);
  t.depth.assign(kSize * kSize, 5.0);
  t.semseg.assign(kSize * kSize, 0);
  t.sun = {0.0, 60.0};

  // make_sample encodes the light of an above-horizon tuple.
  const auto s = train::make_sample<float>(t, scene::kNumClasses, scene::kDepthSentinel);
  CHECK(s.light.v[1] == doctest::Approx(2.0f / 3));
}
