#include "relight/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace relight::data {

namespace {

using nlohmann::json;

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path.string());
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads a Netpbm header (magic, width, height, maxval) and returns the
// offset of the first data byte. '#' comments allowed per the format.
struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::string& bytes, const std::filesystem::path& path) {
  PnmHeader h;
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw IoError("truncated Netpbm header: " + path.string());
    return bytes.substr(start, pos - start);
  };
  h.magic = next_token();
  h.width = std::stoi(next_token());
  h.height = std::stoi(next_token());
  h.maxval = std::stoi(next_token());
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError("malformed Netpbm header: " + path.string());
  }
  h.data_offset = pos + 1;
  if (h.width < 1 || h.height < 1) throw IoError("bad raster dims: " + path.string());
  return h;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  validate(img);
  std::string bytes;
  bytes += "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  bytes.reserve(bytes.size() + img.data.size());
  for (double c : img.data) {
    bytes.push_back(static_cast<char>(static_cast<uint8_t>(std::lround(c * 255.0))));
  }
  write_bytes(path, bytes);
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  const PnmHeader h = parse_pnm_header(bytes, path);
  if (h.magic != "P6" || h.maxval != 255) {
    throw IoError("expected 8-bit P6 PPM: " + path.string());
  }
  const size_t n = static_cast<size_t>(3) * h.width * h.height;
  if (bytes.size() - h.data_offset < n) throw IoError("truncated PPM: " + path.string());
  RgbImage img(h.height, h.width);
  for (size_t i = 0; i < n; ++i) {
    img.data[i] = static_cast<uint8_t>(bytes[h.data_offset + i]) / 255.0;
  }
  return img;
}

void write_depth_pgm(const std::filesystem::path& path, const std::vector<double>& depth,
                     int height, int width, double scale) {
  if (depth.size() != static_cast<size_t>(height) * width) {
    throw ValidationError("depth buffer size does not match dimensions");
  }
  if (scale <= 0) throw ValidationError("depth scale must be positive");
  std::string bytes;
  bytes += "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  for (double d : depth) {
    const double q = std::floor(d / scale + 0.5);
    const uint16_t v = static_cast<uint16_t>(std::clamp(q, 0.0, 65535.0));
    bytes.push_back(static_cast<char>(v >> 8));  // Netpbm is big-endian
    bytes.push_back(static_cast<char>(v & 0xff));
  }
  write_bytes(path, bytes);
}

std::vector<double> read_depth_pgm(const std::filesystem::path& path, int* height,
                                   int* width, double scale) {
  const std::string bytes = read_bytes(path);
  const PnmHeader h = parse_pnm_header(bytes, path);
  if (h.magic != "P5" || h.maxval != 65535) {
    throw IoError("expected 16-bit P5 PGM: " + path.string());
  }
  const size_t n = static_cast<size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < 2 * n) throw IoError("truncated PGM: " + path.string());
  std::vector<double> depth(n);
  for (size_t i = 0; i < n; ++i) {
    const uint16_t v = static_cast<uint16_t>(
        (static_cast<uint8_t>(bytes[h.data_offset + 2 * i]) << 8) |
        static_cast<uint8_t>(bytes[h.data_offset + 2 * i + 1]));
    depth[i] = v * scale;
  }
  *height = h.height;
  *width = h.width;
  return depth;
}

void write_semseg_pgm(const std::filesystem::path& path, const std::vector<uint8_t>& classes,
                      int height, int width) {
  if (classes.size() != static_cast<size_t>(height) * width) {
    throw ValidationError("semseg buffer size does not match dimensions");
  }
  std::string bytes;
  bytes += "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(classes.data()), classes.size());
  write_bytes(path, bytes);
}

std::vector<uint8_t> read_semseg_pgm(const std::filesystem::path& path, int* height,
                                     int* width) {
  const std::string bytes = read_bytes(path);
  const PnmHeader h = parse_pnm_header(bytes, path);
  if (h.magic != "P5" || h.maxval != 255) {
    throw IoError("expected 8-bit P5 PGM: " + path.string());
  }
  const size_t n = static_cast<size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < n) throw IoError("truncated PGM: " + path.string());
  std::vector<uint8_t> classes(n);
  for (size_t i = 0; i < n; ++i) {
    classes[i] = static_cast<uint8_t>(bytes[h.data_offset + i]);
  }
  *height = h.height;
  *width = h.width;
  return classes;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  json palette = json::array();
  for (const auto& [id, name] : m.palette) {
    palette.push_back({{"id", id}, {"name", name}});
  }
  json entries = json::array();
  for (const ManifestEntry& e : m.entries) {
    entries.push_back({{"id", e.id},
                       {"scene", e.scene_id},
                       {"split", e.split},
                       {"rgb", e.rgb_path},
                       {"depth", e.depth_path},
                       {"semseg", e.semseg_path},
                       {"azimuth", e.azimuth_deg},
                       {"zenith", e.zenith_deg}});
  }
  const json doc = {{"format", "relight-dataset"},
                    {"version", Manifest::kVersion},
                    {"palette", palette},
                    {"depth_scale", m.depth_scale},
                    {"depth_sentinel", m.depth_sentinel},
                    {"height", m.height},
                    {"width", m.width},
                    {"entries", entries}};
  write_bytes(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_bytes(path));
  } catch (const json::parse_error& e) {
    throw IoError("manifest is not valid JSON: " + path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "relight-dataset") {
    throw IoError("not a relight-dataset manifest: " + path.string());
  }
  const int version = doc.value("version", -1);
  if (version != Manifest::kVersion) {
    throw IoError("unsupported manifest version " + std::to_string(version) +
                  " (supported: " + std::to_string(Manifest::kVersion) + ")");
  }
  Manifest m;
  m.base_dir = path.parent_path();
  for (const auto& p : doc.at("palette")) {
    m.palette[p.at("id").get<uint8_t>()] = p.at("name").get<std::string>();
  }
  m.depth_scale = doc.at("depth_scale").get<double>();
  m.depth_sentinel = doc.at("depth_sentinel").get<uint16_t>();
  m.height = doc.at("height").get<int>();
  m.width = doc.at("width").get<int>();

  std::set<std::string> train_scenes, test_scenes;
  for (const auto& j : doc.at("entries")) {
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.scene_id = j.at("scene").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.rgb_path = j.at("rgb").get<std::string>();
    e.depth_path = j.at("depth").get<std::string>();
    e.semseg_path = j.at("semseg").get<std::string>();
    e.azimuth_deg = j.at("azimuth").get<double>();
    e.zenith_deg = j.at("zenith").get<double>();
    solar::validate(solar::SunPosition{e.azimuth_deg, e.zenith_deg});
    if (e.split != "train" && e.split != "test") {
      throw IoError("entry " + e.id + ": unknown split '" + e.split + "'");
    }
    (e.split == "train" ? train_scenes : test_scenes).insert(e.scene_id);
    for (const std::string* rel : {&e.rgb_path, &e.depth_path, &e.semseg_path}) {
      if (!std::filesystem::exists(m.base_dir / *rel)) {
        throw IoError("entry " + e.id + ": missing file " + *rel);
      }
    }
    m.entries.push_back(std::move(e));
  }
  for (const std::string& s : train_scenes) {
    if (test_scenes.count(s)) {
      throw IoError("scene " + s + " appears in both train and test splits");
    }
  }
  return m;
}

scene::RenderedTuple load_tuple(const Manifest& m, const ManifestEntry& entry) {
  scene::RenderedTuple t;
  t.rgb = read_ppm(m.base_dir / entry.rgb_path);
  int dh = 0, dw = 0, sh = 0, sw = 0;
  t.depth = read_depth_pgm(m.base_dir / entry.depth_path, &dh, &dw, m.depth_scale);
  t.semseg = read_semseg_pgm(m.base_dir / entry.semseg_path, &sh, &sw);
  if (dh != t.rgb.height || dw != t.rgb.width || sh != t.rgb.height || sw != t.rgb.width) {
    throw IoError("entry " + entry.id + ": raster dimensions disagree");
  }
  t.height = t.rgb.height;
  t.width = t.rgb.width;
  t.sun = {entry.azimuth_deg, entry.zenith_deg};
  for (uint8_t c : t.semseg) {
    if (!m.palette.count(c)) {
      throw IoError("entry " + entry.id + ": class id " + std::to_string(c) +
                    " not in manifest palette");
    }
  }
  return t;
}

}  // namespace relight::data
