#include "relight/losses.hpp"

#include <algorithm>

namespace relight::nn {

const std::vector<std::string>& SunEstConfig::feature_taps() {
  static const std::vector<std::string> kTaps = {"sun.b3", "sun.b4"};
  return kTaps;
}

const std::vector<std::string>& FeatureExtractorConfig::tap_names() {
  static const std::vector<std::string> kTaps = {"feat.c1", "feat.c2", "feat.c3"};
  return kTaps;
}

namespace {

template <typename T>
SunEstNet<T> init_sunest_impl(const SunEstConfig& cfg, uint64_t seed) {
  if (cfg.height % 8 != 0 || cfg.width % 8 != 0) {
    throw ValidationError("SunEst input dims must be divisible by 8");
  }
  SunEstNet<T> net;
  net.config = cfg;
  Rng rng(split_seed(seed, 0x5E57));
  auto conv_param = [&](const std::string& name, int co, int ci) {
    net.params.tensors.emplace(name + ".w",
                               he_uniform<T>(Shape::conv(co, ci, 3, 3), ci * 9, rng));
    net.params.tensors.emplace(name + ".b", Tensor<T>(Shape::vec(co)));
  };
  conv_param("sun.b1", cfg.widths[0], 3);
  conv_param("sun.b2", cfg.widths[1], cfg.widths[0]);
  conv_param("sun.b3", cfg.widths[2], cfg.widths[1]);
  conv_param("sun.b4", cfg.widths[3], cfg.widths[2]);
  net.params.tensors.emplace("sun.fc1.w",
                             he_uniform<T>(Shape::mat(cfg.fc_hidden, cfg.widths[3]),
                                           cfg.widths[3], rng));
  net.params.tensors.emplace("sun.fc1.b", Tensor<T>(Shape::vec(cfg.fc_hidden)));
  net.params.tensors.emplace(
      "sun.head.w", he_uniform<T>(Shape::mat(2, cfg.fc_hidden), cfg.fc_hidden, rng));
  net.params.tensors.emplace("sun.head.b", Tensor<T>(Shape::vec(2)));
  return net;
}

template <typename T>
FeatureExtractor<T> init_feature_extractor_impl(const FeatureExtractorConfig& cfg) {
  FeatureExtractor<T> f;
  f.config = cfg;
  Rng rng(split_seed(cfg.seed, 0xFEA7));
  auto conv_param = [&](const std::string& name, int co, int ci) {
    f.params.tensors.emplace(name + ".w",
                             he_uniform<T>(Shape::conv(co, ci, 3, 3), ci * 9, rng));
    f.params.tensors.emplace(name + ".b", Tensor<T>(Shape::vec(co)));
  };
  conv_param("feat.c1", cfg.widths[0], 3);
  conv_param("feat.c2", cfg.widths[1], cfg.widths[0]);
  conv_param("feat.c3", cfg.widths[2], cfg.widths[1]);
  return f;
}

// Selects tap Vars by public name; unknown names are rejected.
template <typename T>
std::vector<Var<T>> select_taps(const std::vector<Var<T>>& taps,
                                const std::vector<std::string>& available,
                                const std::vector<std::string>& wanted) {
  std::vector<Var<T>> out;
  for (const std::string& name : wanted) {
    const auto it = std::find(available.begin(), available.end(), name);
    if (it == available.end()) throw ValidationError("unknown feature tap: " + name);
    out.push_back(taps[static_cast<size_t>(it - available.begin())]);
  }
  return out;
}

}  // namespace

SunEstNet<float> init_sunest(const SunEstConfig& cfg, uint64_t seed) {
  return init_sunest_impl<float>(cfg, seed);
}
SunEstNet<double> init_sunest_f64(const SunEstConfig& cfg, uint64_t seed) {
  return init_sunest_impl<double>(cfg, seed);
}
FeatureExtractor<float> init_feature_extractor(const FeatureExtractorConfig& cfg) {
  return init_feature_extractor_impl<float>(cfg);
}
FeatureExtractor<double> init_feature_extractor_f64(const FeatureExtractorConfig& cfg) {
  return init_feature_extractor_impl<double>(cfg);
}

double l1_loss(const Tensor<double>& pred, const Tensor<double>& target) {
  return mean_abs_diff(make_input(pred), make_input(target)).value().v[0];
}

double perceptual_loss(const RgbImage& pred, const RgbImage& gt,
                       const FeatureExtractor<double>& f,
                       const std::vector<std::string>& layers) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ValidationError("perceptual_loss: image dims disagree");
  }
  Tape<double> tape(f.params, false);
  auto ta = builder::feature_taps(tape, f.config, make_input(rgb_to_tensor(pred)));
  auto tb = builder::feature_taps(tape, f.config, make_input(rgb_to_tensor(gt)));
  const auto& names = FeatureExtractorConfig::tap_names();
  return builder::perceptual_from_taps(select_taps(ta, names, layers),
                                       select_taps(tb, names, layers))
      .value()
      .v[0];
}

double style_loss(const RgbImage& pred, const RgbImage& gt,
                  const FeatureExtractor<double>& f,
                  const std::vector<std::string>& layers) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ValidationError("style_loss: image dims disagree");
  }
  Tape<double> tape(f.params, false);
  auto ta = builder::feature_taps(tape, f.config, make_input(rgb_to_tensor(pred)));
  auto tb = builder::feature_taps(tape, f.config, make_input(rgb_to_tensor(gt)));
  const auto& names = FeatureExtractorConfig::tap_names();
  return builder::style_from_taps(select_taps(ta, names, layers),
                                  select_taps(tb, names, layers))
      .value()
      .v[0];
}

double sunest_regression_loss(const SunEstNet<double>& net, const RgbImage& img,
                              const solar::LightVector& target) {
  Tape<double> tape(net.params, false);
  Var<double> pred = builder::sunest_head(tape, net.config, make_input(rgb_to_tensor(img)));
  return sum_sq_diff(pred, make_input(light_to_tensor(target))).value().v[0];
}

double sunest_feature_loss(const RgbImage& pred, const RgbImage& gt,
                           const SunEstNet<double>& net) {
  if (pred.height != gt.height || pred.width != gt.width) {
    throw ValidationError("sunest_feature_loss: image dims disagree");
  }
  Tape<double> tape(net.params, false);
  auto ta = builder::sunest_taps(tape, net.config, make_input(rgb_to_tensor(pred)));
  auto tb = builder::sunest_taps(tape, net.config, make_input(rgb_to_tensor(gt)));
  return builder::perceptual_from_taps(ta, tb).value().v[0];
}

LossReport total_loss(const Tensor<double>& pred_l, const Tensor<double>& target_l,
                      const Tensor<double>& pred_ab, const Tensor<double>& target_ab,
                      const RgbImage& pred_rgb, const RgbImage& gt_rgb,
                      const FeatureExtractor<double>& f, const SunEstNet<double>& sunest,
                      const LossWeights& weights) {
  LossReport r;
  r.l1_l = l1_loss(pred_l, target_l);
  r.l1_ab = l1_loss(pred_ab, target_ab);
  r.perceptual = perceptual_loss(pred_rgb, gt_rgb, f, FeatureExtractorConfig::tap_names());
  r.style = style_loss(pred_rgb, gt_rgb, f, FeatureExtractorConfig::tap_names());
  r.sunest = sunest_feature_loss(pred_rgb, gt_rgb, sunest);
  r.total = weights.l1_l * r.l1_l + weights.l1_ab * r.l1_ab +
            weights.perceptual * r.perceptual + weights.style * r.style +
            weights.sunest * r.sunest;
  return r;
}

}  // namespace relight::nn
