#include "relight/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace relight::train {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'R', 'L', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kVersion = 1;

// Raw little-endian scalar I/O. The build targets little-endian hosts; the
// assert documents the file-format contract.
static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

template <typename T>
const char* dtype_name() {
  if constexpr (std::is_same_v<T, float>) {
    return "f32";
  } else {
    return "f64";
  }
}

template <typename T>
json params_header(const nn::ParamStore<T>& params, uint64_t* payload_bytes) {
  json tensors = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : params.tensors) {
    json shape = json::array();
    for (int i = 0; i < t.shape.rank; ++i) shape.push_back(t.shape.d[i]);
    const uint64_t nbytes = t.v.size() * sizeof(T);
    tensors.push_back({{"name", name},
                       {"shape", shape},
                       {"dtype", dtype_name<T>()},
                       {"offset", offset},
                       {"nbytes", nbytes}});
    offset += nbytes;
  }
  *payload_bytes = offset;
  return tensors;
}

template <typename T>
void append_params(std::string& payload, const nn::ParamStore<T>& params) {
  for (const auto& [name, t] : params.tensors) {
    const size_t at = payload.size();
    payload.resize(at + t.v.size() * sizeof(T));
    std::memcpy(payload.data() + at, t.v.data(), t.v.size() * sizeof(T));
  }
}

json net_config_json(const nn::NetConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"semantic_classes", c.semantic_classes},
          {"levels", c.levels},
          {"base_width", c.base_width},
          {"light_latent", c.light_latent},
          {"light_hidden", c.light_hidden},
          {"chroma_skips", c.chroma_skips},
          {"use_depth_input", c.use_depth_input},
          {"use_semseg_input", c.use_semseg_input}};
}

nn::NetConfig net_config_from_json(const json& j) {
  nn::NetConfig c;
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  c.semantic_classes = j.at("semantic_classes").get<int>();
  c.levels = j.at("levels").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.light_latent = j.at("light_latent").get<int>();
  c.light_hidden = j.at("light_hidden").get<int>();
  c.chroma_skips = j.at("chroma_skips").get<bool>();
  c.use_depth_input = j.at("use_depth_input").get<bool>();
  c.use_semseg_input = j.at("use_semseg_input").get<bool>();
  return c;
}

json sunest_config_json(const nn::SunEstConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"widths", {c.widths[0], c.widths[1], c.widths[2], c.widths[3]}},
          {"fc_hidden", c.fc_hidden}};
}

nn::SunEstConfig sunest_config_from_json(const json& j) {
  nn::SunEstConfig c;
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  for (int i = 0; i < 4; ++i) c.widths[i] = j.at("widths").at(i).get<int>();
  c.fc_hidden = j.at("fc_hidden").get<int>();
  return c;
}

json feature_config_json(const nn::FeatureExtractorConfig& c) {
  return {{"seed", c.seed}, {"widths", {c.widths[0], c.widths[1], c.widths[2]}}};
}

nn::FeatureExtractorConfig feature_config_from_json(const json& j) {
  nn::FeatureExtractorConfig c;
  c.seed = j.at("seed").get<uint64_t>();
  for (int i = 0; i < 3; ++i) c.widths[i] = j.at("widths").at(i).get<int>();
  return c;
}

struct HeaderInfo {
  std::string kind;
  std::string dtype;
  json config;
  uint64_t seed = 0;
  json tensors;
};

template <typename T>
nn::ParamStore<T> read_params(const HeaderInfo& h, const std::string& payload,
                              const std::filesystem::path& path) {
  nn::ParamStore<T> params;
  uint64_t expected_offset = 0;
  for (const auto& jt : h.tensors) {
    const std::string name = jt.at("name").get<std::string>();
    const uint64_t offset = jt.at("offset").get<uint64_t>();
    const uint64_t nbytes = jt.at("nbytes").get<uint64_t>();
    if (jt.at("dtype").get<std::string>() != dtype_name<T>()) {
      throw CorruptCheckpoint(path.string() + ": mixed tensor dtypes");
    }
    if (offset != expected_offset) {
      throw CorruptCheckpoint(path.string() + ": non-contiguous tensor " + name);
    }
    expected_offset = offset + nbytes;
    if (offset + nbytes > payload.size()) {
      throw CorruptCheckpoint(path.string() + ": tensor " + name + " beyond payload");
    }
    nn::Shape shape;
    const auto& js = jt.at("shape");
    shape.rank = static_cast<int>(js.size());
    if (shape.rank > 4) throw CorruptCheckpoint(path.string() + ": tensor rank > 4");
    for (int i = 0; i < shape.rank; ++i) shape.d[i] = js.at(i).get<int>();
    if (shape.numel() * sizeof(T) != nbytes) {
      throw CorruptCheckpoint(path.string() + ": tensor " + name + " size mismatch");
    }
    nn::Tensor<T> t(shape);
    std::memcpy(t.v.data(), payload.data() + offset, nbytes);
    params.tensors.emplace(name, std::move(t));
  }
  if (expected_offset != payload.size()) {
    throw CorruptCheckpoint(path.string() + ": payload has trailing bytes");
  }
  return params;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["format"] = "relight-checkpoint";
  header["version"] = kVersion;
  header["seed"] = ckpt.seed;
  uint64_t payload_bytes = 0;
  std::string payload;

  std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, nn::ShadowTransferModel<float>> ||
                      std::is_same_v<M, nn::ShadowTransferModel<double>>) {
          header["kind"] = "shadow_transfer";
          header["config"] = net_config_json(model.config);
        } else if constexpr (std::is_same_v<M, nn::SunEstNet<float>> ||
                             std::is_same_v<M, nn::SunEstNet<double>>) {
          header["kind"] = "sunest";
          header["config"] = sunest_config_json(model.config);
        } else {
          header["kind"] = "feature_extractor";
          header["config"] = feature_config_json(model.config);
        }
        header["tensors"] = params_header(model.params, &payload_bytes);
        payload.reserve(payload_bytes);
        append_params(payload, model.params);
      },
      ckpt.payload);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + sizeof(uint64_t)) {
    throw CorruptCheckpoint(path.string() + ": file shorter than header");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint(path.string() + ": bad magic");
  }
  uint64_t head_len = 0;
  std::memcpy(&head_len, bytes.data() + sizeof(kMagic), sizeof(head_len));
  const size_t head_start = sizeof(kMagic) + sizeof(uint64_t);
  if (head_start + head_len > bytes.size()) {
    throw CorruptCheckpoint(path.string() + ": truncated header");
  }

  HeaderInfo h;
  json header;
  try {
    header = json::parse(bytes.substr(head_start, head_len));
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(path.string() + ": header is not valid JSON");
  }
  if (header.value("format", "") != "relight-checkpoint") {
    throw CorruptCheckpoint(path.string() + ": not a relight checkpoint");
  }
  if (header.value("version", -1) != kVersion) {
    throw CorruptCheckpoint(path.string() + ": unsupported checkpoint version " +
                            std::to_string(header.value("version", -1)));
  }
  h.kind = header.at("kind").get<std::string>();
  h.seed = header.at("seed").get<uint64_t>();
  h.config = header.at("config");
  h.tensors = header.at("tensors");
  h.dtype = h.tensors.empty() ? "f32" : h.tensors.at(0).at("dtype").get<std::string>();

  const std::string payload = bytes.substr(head_start + head_len);

  Checkpoint ckpt;
  ckpt.seed = h.seed;
  if (h.kind == "shadow_transfer") {
    const nn::NetConfig cfg = net_config_from_json(h.config);
    if (h.dtype == "f32") {
      nn::ShadowTransferModel<float> m;
      m.config = cfg;
      m.params = read_params<float>(h, payload, path);
      ckpt.payload = std::move(m);
    } else {
      nn::ShadowTransferModel<double> m;
      m.config = cfg;
      m.params = read_params<double>(h, payload, path);
      ckpt.payload = std::move(m);
    }
  } else if (h.kind == "sunest") {
    const nn::SunEstConfig cfg = sunest_config_from_json(h.config);
    if (h.dtype == "f32") {
      nn::SunEstNet<float> m;
      m.config = cfg;
      m.params = read_params<float>(h, payload, path);
      ckpt.payload = std::move(m);
    } else {
      nn::SunEstNet<double> m;
      m.config = cfg;
      m.params = read_params<double>(h, payload, path);
      ckpt.payload = std::move(m);
    }
  } else if (h.kind == "feature_extractor") {
    const nn::FeatureExtractorConfig cfg = feature_config_from_json(h.config);
    if (h.dtype == "f32") {
      nn::FeatureExtractor<float> m;
      m.config = cfg;
      m.params = read_params<float>(h, payload, path);
      ckpt.payload = std::move(m);
    } else {
      nn::FeatureExtractor<double> m;
      m.config = cfg;
      m.params = read_params<double>(h, payload, path);
      ckpt.payload = std::move(m);
    }
  } else {
    throw CorruptCheckpoint(path.string() + ": unknown kind '" + h.kind + "'");
  }
  return ckpt;
}

}  // namespace relight::train
