#pragma once

#include <string>
#include <vector>

#include "relight/network.hpp"

namespace relight::nn {

/// Small convolutional sun-position regressor: strided conv blocks, global
/// average pooling, a 2-unit head emitting the encoded (azimuth, zenith).
/// The taps named in `feature_taps` (the last two conv blocks) define the
/// illumination feature spaces used by the feature loss.
struct SunEstConfig {
  int height = 64;
  int width = 64;
  // Block output widths; strides are 2,2,2,1. Input must be divisible by 8.
  std::array<int, 4> widths{16, 32, 48, 64};
  int fc_hidden = 64;

  static const std::vector<std::string>& feature_taps();
};

template <typename T>
struct SunEstNet {
  SunEstConfig config;
  ParamStore<T> params;
};

SunEstNet<float> init_sunest(const SunEstConfig& cfg, uint64_t seed);
SunEstNet<double> init_sunest_f64(const SunEstConfig& cfg, uint64_t seed);

/// Fixed-weight convolutional stack whose activations define the perceptual
/// and style losses. Weights are seeded once at construction and never
/// trained; an externally trained parameter set can be swapped in through
/// the checkpoint loader.
struct FeatureExtractorConfig {
  uint64_t seed = 2023;
  std::array<int, 3> widths{8, 16, 24};  // strides 1, 2, 2

  static const std::vector<std::string>& tap_names();
};

template <typename T>
struct FeatureExtractor {
  FeatureExtractorConfig config;
  ParamStore<T> params;
};

FeatureExtractor<float> init_feature_extractor(const FeatureExtractorConfig& cfg);
FeatureExtractor<double> init_feature_extractor_f64(const FeatureExtractorConfig& cfg);

namespace builder {

/// SunEst trunk; returns the named tap activations in declaration order.
/// The RGB input is centered to [-0.5, 0.5] before the first convolution.
template <typename T>
std::vector<Var<T>> sunest_taps(Tape<T>& tape, const SunEstConfig& /*cfg*/, const Var<T>& rgb) {
  auto conv = [&](const Var<T>& x, const std::string& name, int stride) {
    return leaky_relu(
        conv2d(x, tape.param(name + ".w"), tape.param(name + ".b"), stride, 1),
        T(kLeakyAlpha));
  };
  Var<T> x = add_scalar(rgb, T(-0.5));
  x = conv(x, "sun.b1", 2);
  x = conv(x, "sun.b2", 2);
  Var<T> t3 = conv(x, "sun.b3", 2);
  Var<T> t4 = conv(t3, "sun.b4", 1);
  return {t3, t4};
}

/// Full SunEst head: encoded 2-vector prediction.
template <typename T>
Var<T> sunest_head(Tape<T>& tape, const SunEstConfig& cfg, const Var<T>& rgb) {
  Var<T> t4 = sunest_taps(tape, cfg, rgb).back();
  Var<T> pooled = global_avg_pool(t4);
  Var<T> h = leaky_relu(
      dense(pooled, tape.param("sun.fc1.w"), tape.param("sun.fc1.b")), T(kLeakyAlpha));
  return dense(h, tape.param("sun.head.w"), tape.param("sun.head.b"));
}

/// Feature extractor taps, in tap_names() order.
template <typename T>
std::vector<Var<T>> feature_taps(Tape<T>& tape, const FeatureExtractorConfig& /*cfg*/,
                                 const Var<T>& rgb) {
  auto conv = [&](const Var<T>& x, const std::string& name, int stride) {
    return leaky_relu(
        conv2d(x, tape.param(name + ".w"), tape.param(name + ".b"), stride, 1),
        T(kLeakyAlpha));
  };
  Var<T> f1 = conv(rgb, "feat.c1", 1);
  Var<T> f2 = conv(f1, "feat.c2", 2);
  Var<T> f3 = conv(f2, "feat.c3", 2);
  return {f1, f2, f3};
}

/// Mean squared feature distance summed over matched tap pairs.
template <typename T>
Var<T> perceptual_from_taps(const std::vector<Var<T>>& a, const std::vector<Var<T>>& b) {
  std::vector<std::pair<T, Var<T>>> terms;
  for (size_t i = 0; i < a.size(); ++i) {
    terms.push_back({T(1), mean_sq_diff(a[i], b[i])});
  }
  return weighted_sum(terms);
}

/// Squared Frobenius distance between Gram matrices, summed over taps.
template <typename T>
Var<T> style_from_taps(const std::vector<Var<T>>& a, const std::vector<Var<T>>& b) {
  std::vector<std::pair<T, Var<T>>> terms;
  for (size_t i = 0; i < a.size(); ++i) {
    terms.push_back({T(1), sum_sq_diff(gram(a[i]), gram(b[i]))});
  }
  return weighted_sum(terms);
}

}  // namespace builder

/// Diagnostic split of one training objective evaluation. With unit weights
/// total is the plain sum of the five parts (L1 is tracked separately for
/// the L and ab channels).
struct LossReport {
  double l1_l = 0;
  double l1_ab = 0;
  double perceptual = 0;
  double style = 0;
  double sunest = 0;
  double total = 0;
};

struct LossWeights {
  double l1_l = 1.0;
  double l1_ab = 1.0;
  double perceptual = 1.0;
  double style = 1.0;
  double sunest = 1.0;
};

/// Plain (non-graph) entry points used by tests and tooling. All are
/// wrappers over the graph ops, so the numerical path is the one trained.
double l1_loss(const Tensor<double>& pred, const Tensor<double>& target);

double perceptual_loss(const RgbImage& pred, const RgbImage& gt,
                       const FeatureExtractor<double>& f,
                       const std::vector<std::string>& layers);
double style_loss(const RgbImage& pred, const RgbImage& gt,
                  const FeatureExtractor<double>& f,
                  const std::vector<std::string>& layers);

double sunest_regression_loss(const SunEstNet<double>& net, const RgbImage& img,
                              const solar::LightVector& target);
double sunest_feature_loss(const RgbImage& pred, const RgbImage& gt,
                           const SunEstNet<double>& net);

/// Full objective on plain rasters: predicted and ground-truth normalized
/// L/ab planes plus the assembled RGB pair.
LossReport total_loss(const Tensor<double>& pred_l, const Tensor<double>& target_l,
                      const Tensor<double>& pred_ab, const Tensor<double>& target_ab,
                      const RgbImage& pred_rgb, const RgbImage& gt_rgb,
                      const FeatureExtractor<double>& f, const SunEstNet<double>& sunest,
                      const LossWeights& weights = {});

}  // namespace relight::nn
