#include "relight/network.hpp"

#include <algorithm>

namespace relight::nn {

void validate(const NetConfig& cfg) {
  if (cfg.levels < 1) throw ValidationError("levels must be >= 1");
  if (cfg.base_width < 1 || cfg.light_latent < 1 || cfg.light_hidden < 1) {
    throw ValidationError("network widths must be >= 1");
  }
  if (cfg.semantic_classes < 1) throw ValidationError("semantic_classes must be >= 1");
  const int div = 1 << cfg.levels;
  if (cfg.height < div || cfg.width < div || cfg.height % div != 0 || cfg.width % div != 0) {
    throw ValidationError("raster dims must be divisible by 2^levels");
  }
  if (!cfg.use_depth_input && !cfg.use_semseg_input) {
    throw ValidationError("at least one of depth/semseg inputs must be enabled");
  }
}

namespace detail_init {

template <typename T>
ShadowTransferModel<T> init_model(const NetConfig& cfg, uint64_t seed) {
  validate(cfg);
  ShadowTransferModel<T> model;
  model.config = cfg;
  Rng rng(split_seed(seed, 0xA11C));

  auto conv_param = [&](const std::string& name, int co, int ci) {
    const int64_t fan_in = static_cast<int64_t>(ci) * 9;
    model.params.tensors.emplace(name + ".w", he_uniform<T>(Shape::conv(co, ci, 3, 3), fan_in, rng));
    model.params.tensors.emplace(name + ".b", Tensor<T>(Shape::vec(co)));
  };
  auto dense_param = [&](const std::string& name, int m, int n) {
    model.params.tensors.emplace(name + ".w", he_uniform<T>(Shape::mat(m, n), n, rng));
    model.params.tensors.emplace(name + ".b", Tensor<T>(Shape::vec(m)));
  };

  // Creation order is fixed, so a given seed always yields the same draw
  // sequence regardless of map layout.
  for (const bool lum_stage : {true, false}) {
    const std::string p = lum_stage ? "lum" : "chr";
    const int in_ch = lum_stage ? cfg.geometry_channels() : 1;
    const int out_ch = lum_stage ? 1 : 2;
    const bool skips = lum_stage || cfg.chroma_skips;

    dense_param(p + ".light.fc1", cfg.light_hidden, 2);
    dense_param(p + ".light.fc2", cfg.light_latent, cfg.light_hidden);

    for (int l = 0; l < cfg.levels; ++l) {
      conv_param(p + ".enc" + std::to_string(l) + ".c", cfg.level_width(l),
                 l == 0 ? in_ch : cfg.level_width(l - 1) * 2);
      conv_param(p + ".enc" + std::to_string(l) + ".down", cfg.level_width(l) * 2,
                 cfg.level_width(l));
    }
    conv_param(p + ".mid.c", cfg.level_width(cfg.levels),
               cfg.level_width(cfg.levels) + cfg.light_latent);
    for (int l = cfg.levels - 1; l >= 0; --l) {
      const int up_ch = cfg.level_width(l) * 2;
      conv_param(p + ".dec" + std::to_string(l) + ".c", cfg.level_width(l),
                 skips ? up_ch + cfg.level_width(l) : up_ch);
    }
    conv_param(p + ".head", out_ch, cfg.level_width(0));
  }
  return model;
}

template ShadowTransferModel<float> init_model<float>(const NetConfig&, uint64_t);
template ShadowTransferModel<double> init_model<double>(const NetConfig&, uint64_t);

}  // namespace detail_init

ShadowTransferModel<float> init_parameters(const NetConfig& cfg, uint64_t seed) {
  return detail_init::init_model<float>(cfg, seed);
}

ShadowTransferModel<double> init_parameters_f64(const NetConfig& cfg, uint64_t seed) {
  return detail_init::init_model<double>(cfg, seed);
}

Tensor<double> rgb_to_tensor(const RgbImage& img) {
  Tensor<double> t(Shape::chw(3, img.height, img.width));
  const size_t n = img.pixels();
  for (size_t i = 0; i < n; ++i) {
    t.v[i] = img.data[3 * i];
    t.v[n + i] = img.data[3 * i + 1];
    t.v[2 * n + i] = img.data[3 * i + 2];
  }
  return t;
}

RgbImage tensor_to_rgb(const Tensor<double>& t) {
  if (t.shape.rank != 3 || t.shape.d[0] != 3) {
    throw ValidationError("tensor_to_rgb: (3,H,W) required");
  }
  RgbImage img(t.shape.d[1], t.shape.d[2]);
  const size_t n = img.pixels();
  for (size_t i = 0; i < n; ++i) {
    img.data[3 * i] = t.v[i];
    img.data[3 * i + 1] = t.v[n + i];
    img.data[3 * i + 2] = t.v[2 * n + i];
  }
  return img;
}

Tensor<double> depth_to_tensor(const std::vector<double>& depth, int height, int width,
                               double max_depth) {
  if (depth.size() != static_cast<size_t>(height) * width) {
    throw ValidationError("depth_to_tensor: buffer size mismatch");
  }
  if (max_depth <= 0) throw ValidationError("depth_to_tensor: max_depth must be positive");
  Tensor<double> t(Shape::chw(1, height, width));
  for (size_t i = 0; i < depth.size(); ++i) {
    t.v[i] = std::min(depth[i] / max_depth, 1.0);
  }
  return t;
}

Tensor<double> semseg_to_tensor(const std::vector<uint8_t>& classes, int height, int width,
                                int num_classes) {
  if (classes.size() != static_cast<size_t>(height) * width) {
    throw ValidationError("semseg_to_tensor: buffer size mismatch");
  }
  Tensor<double> t(Shape::chw(num_classes, height, width));
  const size_t n = classes.size();
  for (size_t i = 0; i < n; ++i) {
    if (classes[i] >= num_classes) {
      throw ValidationError("semseg_to_tensor: class id outside palette");
    }
    t.v[static_cast<size_t>(classes[i]) * n + i] = 1.0;
  }
  return t;
}

Tensor<double> light_to_tensor(const solar::LightVector& v) {
  Tensor<double> t(Shape::vec(2));
  t.v[0] = v.azimuth;
  t.v[1] = v.zenith;
  return t;
}

}  // namespace relight::nn
