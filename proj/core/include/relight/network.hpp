#pragma once

#include <string>
#include <vector>

#include "relight/autodiff.hpp"
#include "relight/image.hpp"
#include "relight/solar.hpp"

namespace relight::nn {

inline constexpr double kLeakyAlpha = 0.1;

/// Shapes of the stacked luminance/chrominance networks. Width at encoder
/// level l is base_width << l; the bottleneck sits at base_width << levels.
struct NetConfig {
  int height = 64;
  int width = 64;
  int semantic_classes = 4;  // one-hot geometry input channels = 1 + this
  int levels = 3;
  int base_width = 16;
  int light_latent = 64;
  int light_hidden = 32;
  bool chroma_skips = true;  // skip connections in the chrominance stage too

  // Input ablation mask. Disabled planes are zeroed rather than removed, so
  // one architecture serves every ablation row; recorded here so inference
  // applies the same masking the model was trained with.
  bool use_depth_input = true;
  bool use_semseg_input = true;

  int geometry_channels() const { return 1 + semantic_classes; }
  int level_width(int level) const { return base_width << level; }
};

void validate(const NetConfig& cfg);

/// Parameters of both encoder-decoders and both light encoders.
template <typename T>
struct ShadowTransferModel {
  NetConfig config;
  ParamStore<T> params;
};

enum class LightEncoder { A, B };  // A feeds luminance, B chrominance

ShadowTransferModel<float> init_parameters(const NetConfig& cfg, uint64_t seed);
ShadowTransferModel<double> init_parameters_f64(const NetConfig& cfg, uint64_t seed);

namespace builder {

/// Light encoder: 2 -> hidden -> latent, shared shape for both stages.
template <typename T>
Var<T> light_encoder(Tape<T>& tape, const std::string& prefix, const Var<T>& light) {
  Var<T> h = leaky_relu(
      dense(light, tape.param(prefix + ".light.fc1.w"), tape.param(prefix + ".light.fc1.b")),
      T(kLeakyAlpha));
  return dense(h, tape.param(prefix + ".light.fc2.w"), tape.param(prefix + ".light.fc2.b"));
}

/// U-net trunk with the light latent concatenated at the bottleneck.
/// `bounded` selects the output activation: sigmoid for the L channel,
/// tanh for ab.
enum class OutputAct { Sigmoid, Tanh };

template <typename T>
Var<T> unet(Tape<T>& tape, const std::string& prefix, const NetConfig& cfg,
            const Var<T>& input, const Var<T>& light, bool skips, OutputAct act) {
  Var<T> latent = light_encoder(tape, prefix, light);

  auto conv = [&](const Var<T>& x, const std::string& name, int stride) {
    return leaky_relu(
        conv2d(x, tape.param(name + ".w"), tape.param(name + ".b"), stride, 1),
        T(kLeakyAlpha));
  };

  std::vector<Var<T>> taps;
  Var<T> x = input;
  for (int l = 0; l < cfg.levels; ++l) {
    x = conv(x, prefix + ".enc" + std::to_string(l) + ".c", 1);
    taps.push_back(x);
    x = conv(x, prefix + ".enc" + std::to_string(l) + ".down", 2);
  }

  const int hb = cfg.height >> cfg.levels;
  const int wb = cfg.width >> cfg.levels;
  x = concat_ch<T>({x, broadcast_vec_chw(latent, hb, wb)});
  x = conv(x, prefix + ".mid.c", 1);

  for (int l = cfg.levels - 1; l >= 0; --l) {
    x = upsample_nearest2(x);
    if (skips) x = concat_ch<T>({x, taps[l]});
    x = conv(x, prefix + ".dec" + std::to_string(l) + ".c", 1);
  }

  Var<T> head =
      conv2d(x, tape.param(prefix + ".head.w"), tape.param(prefix + ".head.b"), 1, 1);
  return act == OutputAct::Sigmoid ? sigmoid_act(head) : tanh_act(head);
}

template <typename T>
Var<T> luminance(Tape<T>& tape, const NetConfig& cfg, const Var<T>& geometry,
                 const Var<T>& light) {
  return unet(tape, "lum", cfg, geometry, light, /*skips=*/true, OutputAct::Sigmoid);
}

template <typename T>
Var<T> chrominance(Tape<T>& tape, const NetConfig& cfg, const Var<T>& lum_pred,
                   const Var<T>& light) {
  return unet(tape, "chr", cfg, lum_pred, light, cfg.chroma_skips, OutputAct::Tanh);
}

}  // namespace builder

/// Raster <-> tensor bridges.
Tensor<double> rgb_to_tensor(const RgbImage& img);
RgbImage tensor_to_rgb(const Tensor<double>& t);

/// Depth (meters) -> single-channel tensor normalized by max_depth (sky = 1).
Tensor<double> depth_to_tensor(const std::vector<double>& depth, int height, int width,
                               double max_depth);
/// Class ids -> one-hot (K,H,W) tensor.
Tensor<double> semseg_to_tensor(const std::vector<uint8_t>& classes, int height, int width,
                                int num_classes);
Tensor<double> light_to_tensor(const solar::LightVector& v);

/// Geometry input (1+K, H, W): depth plane then one-hot planes. Ablations
/// zero the respective planes, keeping one architecture for every variant.
template <typename T>
Tensor<T> geometry_input(const Tensor<T>& depth, const Tensor<T>& semseg_onehot,
                         bool use_depth, bool use_semseg) {
  const int h = depth.shape.d[1], w = depth.shape.d[2];
  const int k = semseg_onehot.shape.d[0];
  if (semseg_onehot.shape.d[1] != h || semseg_onehot.shape.d[2] != w) {
    throw ValidationError("geometry_input: raster dims disagree");
  }
  Tensor<T> out(Shape::chw(1 + k, h, w));
  if (use_depth) {
    std::copy(depth.v.begin(), depth.v.end(), out.v.begin());
  }
  if (use_semseg) {
    std::copy(semseg_onehot.v.begin(), semseg_onehot.v.end(),
              out.v.begin() + static_cast<size_t>(h) * w);
  }
  return out;
}

/// Inference entry points (no gradient tracking).
template <typename T>
Tensor<T> light_encode(const ShadowTransferModel<T>& model, const solar::LightVector& v,
                       LightEncoder which) {
  Tape<T> tape(model.params, false);
  Var<T> light = make_input(light_to_tensor(v).template cast<T>());
  return builder::light_encoder(tape, which == LightEncoder::A ? "lum" : "chr", light)
      .value();
}

template <typename T>
Tensor<T> luminance_forward(const ShadowTransferModel<T>& model, const Tensor<T>& geometry,
                            const solar::LightVector& v) {
  if (geometry.shape !=
      Shape::chw(model.config.geometry_channels(), model.config.height, model.config.width)) {
    throw ValidationError("luminance_forward: geometry shape mismatch, got " +
                          geometry.shape.str());
  }
  Tape<T> tape(model.params, false);
  Var<T> light = make_input(light_to_tensor(v).template cast<T>());
  return builder::luminance(tape, model.config, make_input(geometry), light).value();
}

template <typename T>
Tensor<T> chrominance_forward(const ShadowTransferModel<T>& model, const Tensor<T>& lum_pred,
                              const solar::LightVector& v) {
  if (lum_pred.shape != Shape::chw(1, model.config.height, model.config.width)) {
    throw ValidationError("chrominance_forward: luminance shape mismatch");
  }
  Tape<T> tape(model.params, false);
  Var<T> light = make_input(light_to_tensor(v).template cast<T>());
  return builder::chrominance(tape, model.config, make_input(lum_pred), light).value();
}

template <typename T>
struct ForwardResult {
  Tensor<T> lum;      // (1,H,W) normalized L'
  Tensor<T> chroma;   // (2,H,W) normalized a',b'
  RgbImage rgb;       // assembled, clamped
};

/// Full pass: luminance, chrominance, Lab assembly, RGB conversion.
template <typename T>
ForwardResult<T> forward(const ShadowTransferModel<T>& model, const Tensor<T>& geometry,
                         const solar::LightVector& v) {
  ForwardResult<T> out;
  out.lum = luminance_forward(model, geometry, v);
  out.chroma = chrominance_forward(model, out.lum, v);
  Tape<T> tape(model.params, false);
  Var<T> lab = concat_ch<T>({make_input(out.lum), make_input(out.chroma)});
  out.rgb = tensor_to_rgb(lab_to_srgb_norm(lab).value().template cast<double>());
  return out;
}

namespace detail_init {
template <typename T>
ShadowTransferModel<T> init_model(const NetConfig& cfg, uint64_t seed);
}

}  // namespace relight::nn
