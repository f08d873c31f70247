#pragma once

#include <functional>
#include <iosfwd>
#include <numeric>
#include <vector>

#include "relight/dataio.hpp"
#include "relight/losses.hpp"
#include "relight/metrics.hpp"
#include "relight/network.hpp"
#include "relight/parallel.hpp"

namespace relight::train {

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 2e-4;
  int batch_size = 8;
  uint64_t seed = 0;
  bool use_sunest_loss = true;
  bool use_depth_input = true;
  bool use_semseg_input = true;
  nn::LossWeights weights;
  bool deterministic = true;  // ordered reductions; this implementation
                              // reduces deterministically in every mode
  Optimizer optimizer = Optimizer::Adam;
  int threads = 1;
};

void validate(const TrainConfig& cfg);

/// Desk-scale defaults for the two training stages.
TrainConfig sunest_defaults();
TrainConfig shadow_transfer_defaults();

/// One tuple converted to network tensors.
template <typename T>
struct TrainingSample {
  nn::Tensor<T> depth;      // (1,H,W), normalized by the manifest max depth
  nn::Tensor<T> semseg;     // (K,H,W) one-hot
  nn::Tensor<T> target_l;   // (1,H,W) normalized L'
  nn::Tensor<T> target_ab;  // (2,H,W) normalized a'b'
  nn::Tensor<T> gt_rgb;     // (3,H,W)
  nn::Tensor<T> light;      // (2)
  solar::SunPosition sun;
  std::string scene_id;
};

/// One rendered tuple -> training tensors.
template <typename T>
TrainingSample<T> make_sample(const scene::RenderedTuple& t, int num_classes,
                              double max_depth);

/// Loads every manifest entry of `split`, converting rasters to tensors.
/// Sun angles are discretized at load time when a config is given; tuples
/// whose sun sits at or below the horizon are excluded from training.
template <typename T>
std::vector<TrainingSample<T>> load_training_set(
    const data::Manifest& manifest, const std::string& split,
    const solar::DiscretizeConfig* discretize = nullptr);

struct TrainLogEntry {
  int64_t step = 0;
  int epoch = 0;
  nn::LossReport losses;
};
using TrainLogFn = std::function<void(const TrainLogEntry&)>;

/// Writes "step,epoch,l1_l,l1_ab,perceptual,style,sunest,total" CSV lines.
TrainLogFn make_csv_logger(std::ostream& out);

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8), or plain
/// SGD. State is keyed by parameter name; steps are sequential.
template <typename T>
class Optim {
 public:
  Optim(Optimizer kind, double lr) : kind_(kind), lr_(lr) {}

  void step(nn::ParamStore<T>& params, const std::map<std::string, nn::Tensor<T>>& grads) {
    ++t_;
    for (auto& [name, p] : params.tensors) {
      const auto git = grads.find(name);
      if (git == grads.end()) continue;
      const nn::Tensor<T>& g = git->second;
      if (kind_ == Optimizer::Sgd) {
        for (size_t i = 0; i < p.v.size(); ++i) p.v[i] -= T(lr_) * g.v[i];
        continue;
      }
      auto& m = state(m_, name, p.shape);
      auto& v = state(v_, name, p.shape);
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
      for (size_t i = 0; i < p.v.size(); ++i) {
        const double gi = static_cast<double>(g.v[i]);
        m.v[i] = T(kBeta1 * m.v[i] + (1 - kBeta1) * gi);
        v.v[i] = T(kBeta2 * v.v[i] + (1 - kBeta2) * gi * gi);
        const double mhat = m.v[i] / bc1;
        const double vhat = v.v[i] / bc2;
        p.v[i] -= T(lr_ * mhat / (std::sqrt(vhat) + kEps));
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  nn::Tensor<T>& state(std::map<std::string, nn::Tensor<T>>& store, const std::string& name,
                       const nn::Shape& shape) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, nn::Tensor<T>(shape)).first;
    return it->second;
  }

  Optimizer kind_;
  double lr_;
  int64_t t_ = 0;
  std::map<std::string, nn::Tensor<T>> m_, v_;
};

namespace detail {

/// Per-sample Shadow Transfer loss graph. Returns the scalar total plus the
/// individual terms for reporting.
template <typename T>
struct SampleLoss {
  nn::Var<T> total;
  nn::LossReport report;
};

template <typename T>
SampleLoss<T> shadow_transfer_loss(const nn::NetConfig& cfg, const nn::SunEstNet<T>& sunest,
                                   const nn::FeatureExtractor<T>& extractor,
                                   const TrainingSample<T>& sample,
                                   const nn::LossWeights& weights, bool use_sunest_loss,
                                   nn::Tape<T>& model_tape) {
  nn::Tape<T> sun_tape(sunest.params, false);
  nn::Tape<T> feat_tape(extractor.params, false);

  nn::Var<T> geometry = nn::make_input(nn::geometry_input(
      sample.depth, sample.semseg, cfg.use_depth_input, cfg.use_semseg_input));
  nn::Var<T> light = nn::make_input(sample.light);

  nn::Var<T> lum = nn::builder::luminance(model_tape, cfg, geometry, light);
  nn::Var<T> chroma = nn::builder::chrominance(model_tape, cfg, lum, light);
  nn::Var<T> rgb = nn::lab_to_srgb_norm(nn::concat_ch<T>({lum, chroma}));

  nn::Var<T> target_l = nn::make_input(sample.target_l);
  nn::Var<T> target_ab = nn::make_input(sample.target_ab);
  nn::Var<T> gt_rgb = nn::make_input(sample.gt_rgb);

  nn::Var<T> l1_l = nn::mean_abs_diff(lum, target_l);
  nn::Var<T> l1_ab = nn::mean_abs_diff(chroma, target_ab);

  auto pred_taps = nn::builder::feature_taps(feat_tape, extractor.config, rgb);
  auto gt_taps = nn::builder::feature_taps(feat_tape, extractor.config, gt_rgb);
  nn::Var<T> perceptual = nn::builder::perceptual_from_taps(pred_taps, gt_taps);
  nn::Var<T> style = nn::builder::style_from_taps(pred_taps, gt_taps);

  SampleLoss<T> out;
  std::vector<std::pair<T, nn::Var<T>>> terms = {{T(weights.l1_l), l1_l},
                                                 {T(weights.l1_ab), l1_ab},
                                                 {T(weights.perceptual), perceptual},
                                                 {T(weights.style), style}};
  if (use_sunest_loss) {
    auto sun_pred = nn::builder::sunest_taps(sun_tape, sunest.config, rgb);
    auto sun_gt = nn::builder::sunest_taps(sun_tape, sunest.config, gt_rgb);
    nn::Var<T> sun_loss = nn::builder::perceptual_from_taps(sun_pred, sun_gt);
    out.report.sunest = static_cast<double>(sun_loss.value().v[0]);
    terms.push_back({T(weights.sunest), sun_loss});
  }
  out.total = nn::weighted_sum(terms);
  out.report.l1_l = static_cast<double>(l1_l.value().v[0]);
  out.report.l1_ab = static_cast<double>(l1_ab.value().v[0]);
  out.report.perceptual = static_cast<double>(perceptual.value().v[0]);
  out.report.style = static_cast<double>(style.value().v[0]);
  out.report.total = static_cast<double>(out.total.value().v[0]);
  return out;
}

template <typename T>
void add_grads(std::map<std::string, nn::Tensor<T>>& acc,
               const std::map<std::string, nn::Tensor<T>>& g) {
  for (const auto& [name, t] : g) {
    auto it = acc.find(name);
    if (it == acc.end()) {
      acc.emplace(name, t);
    } else {
      for (size_t i = 0; i < t.v.size(); ++i) it->second.v[i] += t.v[i];
    }
  }
}

template <typename T>
std::vector<int> shuffled_indices(size_t n, uint64_t seed, int epoch) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(split_seed(seed, 0xE90C + static_cast<uint64_t>(epoch)));
  for (size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index(i)]);
  }
  return idx;
}

}  // namespace detail

/// Stage 1: trains the sun-position regressor on ground-truth images with a
/// squared-Euclidean loss against the encoded sun position.
template <typename T>
nn::SunEstNet<T> train_sunest(const std::vector<TrainingSample<T>>& train,
                              const TrainConfig& cfg, const nn::SunEstConfig& net_cfg,
                              const TrainLogFn& log = nullptr) {
  validate(cfg);
  if (train.empty()) throw ValidationError("training set is empty");

  nn::SunEstNet<T> net = [&] {
    if constexpr (std::is_same_v<T, float>) {
      return nn::init_sunest(net_cfg, cfg.seed);
    } else {
      return nn::init_sunest_f64(net_cfg, cfg.seed);
    }
  }();

  Optim<T> optim(cfg.optimizer, cfg.learning_rate);
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = detail::shuffled_indices<T>(train.size(), cfg.seed, epoch);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t count = std::min<size_t>(cfg.batch_size, order.size() - start);
      std::vector<std::map<std::string, nn::Tensor<T>>> grads(count);
      std::vector<double> losses(count);
      parallel_for(static_cast<int64_t>(count), cfg.threads, [&](int64_t i) {
        const TrainingSample<T>& s = train[order[start + i]];
        nn::Tape<T> tape(net.params, true);
        nn::Var<T> pred =
            nn::builder::sunest_head(tape, net.config, nn::make_input(s.gt_rgb));
        nn::Var<T> loss = nn::sum_sq_diff(pred, nn::make_input(s.light));
        nn::backward(loss);
        grads[i] = tape.grads();
        losses[i] = static_cast<double>(loss.value().v[0]);
      });
      std::map<std::string, nn::Tensor<T>> acc;
      double mean_loss = 0;
      for (size_t i = 0; i < count; ++i) {
        detail::add_grads(acc, grads[i]);
        mean_loss += losses[i];
      }
      mean_loss /= static_cast<double>(count);
      if (!std::isfinite(mean_loss)) {
        throw DivergenceError("sunest training diverged at step " + std::to_string(step) +
                              " (epoch " + std::to_string(epoch) + ")");
      }
      for (auto& [name, g] : acc) {
        for (T& v : g.v) v /= T(count);
      }
      optim.step(net.params, acc);
      if (log) {
        nn::LossReport r;
        r.sunest = mean_loss;
        r.total = mean_loss;
        log({step, epoch, r});
      }
      ++step;
    }
  }
  return net;
}

/// Stage 2: trains the Shadow Transfer model against the four-part loss with
/// the SunEst network frozen (its parameters are never touched; the feature
/// loss only propagates into the generated image).
template <typename T>
nn::ShadowTransferModel<T> train_shadow_transfer(const std::vector<TrainingSample<T>>& train,
                                                 const nn::SunEstNet<T>& frozen_sunest,
                                                 const TrainConfig& cfg,
                                                 nn::NetConfig net_cfg,
                                                 const TrainLogFn& log = nullptr) {
  validate(cfg);
  if (train.empty()) throw ValidationError("training set is empty");

  net_cfg.use_depth_input = cfg.use_depth_input;
  net_cfg.use_semseg_input = cfg.use_semseg_input;
  nn::ShadowTransferModel<T> model = [&] {
    if constexpr (std::is_same_v<T, float>) {
      return nn::init_parameters(net_cfg, cfg.seed);
    } else {
      return nn::init_parameters_f64(net_cfg, cfg.seed);
    }
  }();

  const nn::FeatureExtractor<T> extractor = [&] {
    if constexpr (std::is_same_v<T, float>) {
      return nn::init_feature_extractor({});
    } else {
      return nn::init_feature_extractor_f64({});
    }
  }();

  Optim<T> optim(cfg.optimizer, cfg.learning_rate);
  int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = detail::shuffled_indices<T>(train.size(), cfg.seed, epoch);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t count = std::min<size_t>(cfg.batch_size, order.size() - start);
      std::vector<std::map<std::string, nn::Tensor<T>>> grads(count);
      std::vector<nn::LossReport> reports(count);
      parallel_for(static_cast<int64_t>(count), cfg.threads, [&](int64_t i) {
        const TrainingSample<T>& s = train[order[start + i]];
        nn::Tape<T> tape(model.params, true);
        auto sample_loss = detail::shadow_transfer_loss(
            model.config, frozen_sunest, extractor, s, cfg.weights, cfg.use_sunest_loss,
            tape);
        nn::backward(sample_loss.total);
        grads[i] = tape.grads();
        reports[i] = sample_loss.report;
      });
      std::map<std::string, nn::Tensor<T>> acc;
      nn::LossReport mean;
      for (size_t i = 0; i < count; ++i) {
        detail::add_grads(acc, grads[i]);
        mean.l1_l += reports[i].l1_l;
        mean.l1_ab += reports[i].l1_ab;
        mean.perceptual += reports[i].perceptual;
        mean.style += reports[i].style;
        mean.sunest += reports[i].sunest;
        mean.total += reports[i].total;
      }
      const double inv = 1.0 / static_cast<double>(count);
      mean.l1_l *= inv;
      mean.l1_ab *= inv;
      mean.perceptual *= inv;
      mean.style *= inv;
      mean.sunest *= inv;
      mean.total *= inv;
      if (!std::isfinite(mean.total)) {
        throw DivergenceError("shadow transfer training diverged at step " +
                              std::to_string(step) + " (epoch " + std::to_string(epoch) +
                              ")");
      }
      for (auto& [name, g] : acc) {
        for (T& v : g.v) v *= T(inv);
      }
      optim.step(model.params, acc);
      if (log) log({step, epoch, mean});
      ++step;
    }
  }
  return model;
}

/// Forward pass at an arbitrary target sun position; rejects positions at or
/// below the horizon.
template <typename T>
RgbImage relight(const nn::ShadowTransferModel<T>& model, const nn::Tensor<T>& depth,
                 const nn::Tensor<T>& semseg, const solar::SunPosition& target) {
  if (!solar::above_horizon(target)) {
    throw ValidationError("relight target below horizon (zenith >= 90)");
  }
  const nn::Tensor<T> geometry = nn::geometry_input(
      depth, semseg, model.config.use_depth_input, model.config.use_semseg_input);
  return nn::forward(model, geometry, solar::encode_light(target)).rgb;
}

/// metrics::RelightFn over a trained model: relights each test tuple's
/// geometry to the tuple's sun position.
template <typename T>
metrics::RelightFn make_relighter(const nn::ShadowTransferModel<T>& model,
                                  double max_depth) {
  return [&model, max_depth](const scene::RenderedTuple& t) -> std::optional<RgbImage> {
    const auto depth =
        nn::depth_to_tensor(t.depth, t.height, t.width, max_depth).template cast<T>();
    const auto semseg =
        nn::semseg_to_tensor(t.semseg, t.height, t.width, model.config.semantic_classes)
            .template cast<T>();
    return relight(model, depth, semseg, t.sun);
  };
}

/// Held-out mean absolute angular errors of a SunEst network, degrees.
struct SunEstError {
  double azimuth_deg = 0;
  double zenith_deg = 0;
};

template <typename T>
SunEstError sunest_holdout_error(const nn::SunEstNet<T>& net,
                                 const std::vector<TrainingSample<T>>& samples) {
  if (samples.empty()) throw ValidationError("no samples");
  double az = 0, zen = 0;
  for (const auto& s : samples) {
    nn::Tape<T> tape(net.params, false);
    const auto pred =
        nn::builder::sunest_head(tape, net.config, nn::make_input(s.gt_rgb)).value();
    const solar::SunPosition decoded = solar::decode_light(
        {static_cast<double>(pred.v[0]), static_cast<double>(pred.v[1])});
    az += std::abs(solar::wrap_azimuth(decoded.azimuth_deg - s.sun.azimuth_deg));
    zen += std::abs(decoded.zenith_deg - s.sun.zenith_deg);
  }
  return {az / samples.size(), zen / samples.size()};
}

template <typename T>
TrainingSample<T> make_sample(const scene::RenderedTuple& t, int num_classes,
                              double max_depth) {
  TrainingSample<T> s;
  s.depth = nn::depth_to_tensor(t.depth, t.height, t.width, max_depth).template cast<T>();
  s.semseg =
      nn::semseg_to_tensor(t.semseg, t.height, t.width, num_classes).template cast<T>();
  const auto planes = color::normalize_lab(color::srgb_to_lab(t.rgb));
  const size_t n = static_cast<size_t>(t.height) * t.width;
  s.target_l = nn::Tensor<T>(nn::Shape::chw(1, t.height, t.width));
  s.target_ab = nn::Tensor<T>(nn::Shape::chw(2, t.height, t.width));
  for (size_t i = 0; i < n; ++i) {
    s.target_l.v[i] = static_cast<T>(planes[i]);
    s.target_ab.v[i] = static_cast<T>(planes[n + i]);
    s.target_ab.v[n + i] = static_cast<T>(planes[2 * n + i]);
  }
  s.gt_rgb = nn::rgb_to_tensor(t.rgb).template cast<T>();
  s.light = nn::light_to_tensor(solar::encode_light(t.sun)).template cast<T>();
  s.sun = t.sun;
  return s;
}

template <typename T>
std::vector<TrainingSample<T>> load_training_set(const data::Manifest& manifest,
                                                 const std::string& split,
                                                 const solar::DiscretizeConfig* discretize) {
  std::vector<TrainingSample<T>> out;
  const double max_depth = manifest.depth_scale * manifest.depth_sentinel;
  const int k = static_cast<int>(manifest.palette.size());
  for (const auto& entry : manifest.entries) {
    if (entry.split != split) continue;
    solar::SunPosition sun{entry.azimuth_deg, entry.zenith_deg};
    if (discretize) sun = solar::discretize(sun, *discretize);
    if (!solar::above_horizon(sun)) continue;  // below-horizon samples excluded
    scene::RenderedTuple t = data::load_tuple(manifest, entry);
    t.sun = sun;
    TrainingSample<T> s = make_sample<T>(t, k, max_depth);
    s.scene_id = entry.scene_id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace relight::train
