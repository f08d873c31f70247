// relight: dataset generation, two-stage training, relighting, evaluation
// and verification for the shadow-transfer pipeline.
//
// Exit codes: 0 success, 1 validation/usage, 2 verification failure, 3 I/O.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "relight/checkpoint.hpp"
#include "relight/datagen.hpp"
#include "relight/dataio.hpp"
#include "relight/metrics.hpp"
#include "relight/oracles.hpp"
#include "relight/parallel.hpp"
#include "relight/pipeline.hpp"

namespace {

using namespace relight;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerifyFailed = 2;
constexpr int kExitIo = 3;

std::vector<solar::SunPosition> parse_positions(const std::string& arg) {
  if (arg == "default9") return solar::default_positions();
  std::vector<solar::SunPosition> out;
  std::stringstream ss(arg);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("positions must be 'az,zen;az,zen;...' or 'default9'");
    }
    solar::SunPosition p{std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1))};
    solar::validate(p);
    out.push_back(p);
  }
  if (out.empty()) throw ValidationError("empty position list");
  return out;
}

std::pair<int, int> parse_size(const std::string& arg) {
  const auto x = arg.find('x');
  if (x == std::string::npos) throw ValidationError("size must be HxW, e.g. 64x64");
  return {std::stoi(arg.substr(0, x)), std::stoi(arg.substr(x + 1))};
}

// Minimal ISO-8601 UTC parser: YYYY-MM-DDTHH:MM:SS with optional 'Z'.
int64_t parse_iso8601_utc(const std::string& s) {
  int y, mo, d, h, mi, sec;
  char t;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &t, &h, &mi, &sec) != 7 ||
      (t != 'T' && t != ' ')) {
    throw ValidationError("time must be ISO-8601, e.g. 2003-10-17T19:30:30Z");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60 || h < 0 ||
      mi < 0 || sec < 0) {
    throw ValidationError("time field out of range: " + s);
  }
  // Days from civil epoch (Howard Hinnant's algorithm).
  const int yy = y - (mo <= 2);
  const int era = (yy >= 0 ? yy : yy - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(yy - era * 400);
  const unsigned doy = (153u * (mo + (mo > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const int64_t days = static_cast<int64_t>(era) * 146097 + static_cast<int64_t>(doe) - 719468;
  return days * 86400 + h * 3600 + mi * 60 + sec;
}

void apply_ablation(const std::string& ablate, train::TrainConfig& cfg) {
  if (ablate == "none") {
    return;
  } else if (ablate == "no-sun-loss") {
    cfg.use_sunest_loss = false;
  } else if (ablate == "depth-only") {
    cfg.use_semseg_input = false;
  } else if (ablate == "seg-only") {
    cfg.use_depth_input = false;
  } else {
    throw ValidationError("unknown ablation '" + ablate +
                          "' (none|no-sun-loss|depth-only|seg-only)");
  }
}

template <typename T>
nn::SunEstNet<T> sunest_from_checkpoint(const std::filesystem::path& path) {
  train::Checkpoint ckpt = train::load_checkpoint(path);
  if (auto* p = std::get_if<nn::SunEstNet<T>>(&ckpt.payload)) return std::move(*p);
  // Cross-precision load: cast.
  if (auto* pf = std::get_if<nn::SunEstNet<float>>(&ckpt.payload)) {
    nn::SunEstNet<T> out;
    out.config = pf->config;
    out.params = pf->params.template cast<T>();
    return out;
  }
  if (auto* pd = std::get_if<nn::SunEstNet<double>>(&ckpt.payload)) {
    nn::SunEstNet<T> out;
    out.config = pd->config;
    out.params = pd->params.template cast<T>();
    return out;
  }
  throw ValidationError(path.string() + " is not a sunest checkpoint");
}

int cmd_gen(int scenes, const std::string& positions, const std::string& size,
            uint64_t seed, const std::string& out, double test_fraction, int threads) {
  scene::DatasetConfig cfg;
  cfg.scenes = scenes;
  cfg.positions = parse_positions(positions);
  std::tie(cfg.height, cfg.width) = parse_size(size);
  cfg.seed = seed;
  cfg.test_fraction = test_fraction;
  cfg.threads = threads;
  const data::Manifest m = scene::generate_dataset(cfg, out);
  std::cout << "wrote " << m.entries.size() << " tuples to " << out << "\n";
  return kExitOk;
}

int cmd_train_sunest(const std::string& data, const std::string& out, int epochs,
                     double lr, int batch, uint64_t seed, const std::string& log_path,
                     int threads, const std::string& dtype) {
  const data::Manifest manifest = data::read_manifest(data);
  train::TrainConfig cfg = train::sunest_defaults();
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.batch_size = batch;
  cfg.seed = seed;
  cfg.threads = threads;

  std::ofstream log_file;
  train::TrainLogFn log;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw IoError("cannot open log: " + log_path);
    log = train::make_csv_logger(log_file);
  }

  nn::SunEstConfig net_cfg;
  net_cfg.height = manifest.height;
  net_cfg.width = manifest.width;

  train::Checkpoint ckpt;
  ckpt.seed = seed;
  if (dtype == "f64") {
    const auto set = train::load_training_set<double>(manifest, "train");
    ckpt.payload = train::train_sunest<double>(set, cfg, net_cfg, log);
  } else {
    const auto set = train::load_training_set<float>(manifest, "train");
    ckpt.payload = train::train_sunest<float>(set, cfg, net_cfg, log);
  }
  train::save_checkpoint(out, ckpt);
  std::cout << "saved sunest checkpoint " << out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data, const std::string& sunest_path,
              const std::string& out, int epochs, double lr, int batch, uint64_t seed,
              const std::string& ablate, const std::string& log_path, int threads,
              const std::string& dtype) {
  train::TrainConfig cfg = train::shadow_transfer_defaults();
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.batch_size = batch;
  cfg.seed = seed;
  cfg.threads = threads;
  apply_ablation(ablate, cfg);
  if (cfg.use_sunest_loss && sunest_path.empty()) {
    throw ValidationError("--sunest is required unless --ablate no-sun-loss");
  }

  const data::Manifest manifest = data::read_manifest(data);
  nn::NetConfig net_cfg;
  net_cfg.height = manifest.height;
  net_cfg.width = manifest.width;
  net_cfg.semantic_classes = static_cast<int>(manifest.palette.size());

  std::ofstream log_file;
  train::TrainLogFn log;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw IoError("cannot open log: " + log_path);
    log = train::make_csv_logger(log_file);
  }

  train::Checkpoint ckpt;
  ckpt.seed = seed;
  if (dtype == "f64") {
    nn::SunEstNet<double> sunest;
    if (!sunest_path.empty()) {
      sunest = sunest_from_checkpoint<double>(sunest_path);
    } else {
      sunest = nn::init_sunest_f64({manifest.height, manifest.width}, seed);
    }
    const auto set = train::load_training_set<double>(manifest, "train");
    ckpt.payload = train::train_shadow_transfer<double>(set, sunest, cfg, net_cfg, log);
  } else {
    nn::SunEstNet<float> sunest;
    if (!sunest_path.empty()) {
      sunest = sunest_from_checkpoint<float>(sunest_path);
    } else {
      sunest = nn::init_sunest({manifest.height, manifest.width}, seed);
    }
    const auto set = train::load_training_set<float>(manifest, "train");
    ckpt.payload = train::train_shadow_transfer<float>(set, sunest, cfg, net_cfg, log);
  }
  train::save_checkpoint(out, ckpt);
  std::cout << "saved shadow-transfer checkpoint " << out << "\n";
  return kExitOk;
}

int cmd_relight(const std::string& model_path, const std::string& depth_path,
                const std::string& semseg_path, double azimuth, double zenith,
                const std::string& out, double depth_scale) {
  train::Checkpoint ckpt = train::load_checkpoint(model_path);
  const solar::SunPosition target{azimuth, zenith};
  solar::validate(target);

  int dh = 0, dw = 0, sh = 0, sw = 0;
  const auto depth = data::read_depth_pgm(depth_path, &dh, &dw, depth_scale);
  const auto semseg = data::read_semseg_pgm(semseg_path, &sh, &sw);
  if (dh != sh || dw != sw) throw ValidationError("depth/semseg dimensions disagree");
  const double max_depth = depth_scale * 65535.0;

  RgbImage img = std::visit(
      [&](const auto& model) -> RgbImage {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, nn::ShadowTransferModel<float>> ||
                      std::is_same_v<M, nn::ShadowTransferModel<double>>) {
          using T = typename std::decay_t<decltype(model.params.tensors.begin()->second.v[0])>;
          const auto d = nn::depth_to_tensor(depth, dh, dw, max_depth).template cast<T>();
          const auto s =
              nn::semseg_to_tensor(semseg, sh, sw, model.config.semantic_classes)
                  .template cast<T>();
          return train::relight(model, d, s, target);
        } else {
          throw ValidationError(model_path + " is not a shadow-transfer checkpoint");
        }
      },
      ckpt.payload);
  data::write_ppm(out, img);
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_eval(const std::vector<std::string>& model_paths,
             const std::vector<std::string>& labels, const std::string& data,
             const std::string& report_path, bool baseline, int threads) {
  const data::Manifest manifest = data::read_manifest(data);
  const double max_depth = manifest.depth_scale * manifest.depth_sentinel;

  std::vector<scene::RenderedTuple> test;
  for (const auto& e : manifest.entries) {
    if (e.split == "test") test.push_back(data::load_tuple(manifest, e));
  }
  if (test.empty()) throw ValidationError("manifest has no test tuples");

  metrics::MssimReport report;
  for (size_t i = 0; i < model_paths.size(); ++i) {
    train::Checkpoint ckpt = train::load_checkpoint(model_paths[i]);
    const std::string label =
        i < labels.size() ? labels[i] : std::filesystem::path(model_paths[i]).stem().string();
    std::visit(
        [&](const auto& model) {
          using M = std::decay_t<decltype(model)>;
          if constexpr (std::is_same_v<M, nn::ShadowTransferModel<float>> ||
                        std::is_same_v<M, nn::ShadowTransferModel<double>>) {
            const auto fn = train::make_relighter(model, max_depth);
            report.series.push_back(metrics::evaluate_series(label, test, fn, {}, threads));
          } else {
            throw ValidationError(model_paths[i] + " is not a shadow-transfer checkpoint");
          }
        },
        ckpt.payload);
  }

  if (baseline) {
    std::vector<scene::RenderedTuple> trainset;
    for (const auto& e : manifest.entries) {
      if (e.split == "train") trainset.push_back(data::load_tuple(manifest, e));
    }
    const auto means = metrics::mean_images_by_position(trainset);
    const auto fn = [&](const scene::RenderedTuple& t) -> std::optional<RgbImage> {
      const auto it = means.find({t.sun.azimuth_deg, t.sun.zenith_deg});
      if (it == means.end()) return std::nullopt;
      return it->second;
    };
    report.series.push_back(
        metrics::evaluate_series("baseline-mean-train", test, fn, {}, threads));
  }

  std::ofstream out(report_path);
  if (!out) throw IoError("cannot open report: " + report_path);
  metrics::write_report(out, report);
  std::ofstream echo_null;
  metrics::write_report(std::cout, report);
  return kExitOk;
}

int cmd_verify(const std::string& suite, uint64_t seed, int threads) {
  std::vector<oracle::Check> checks;
  if (suite == "colorspace") {
    checks = oracle::verify_colorspace(seed, 100000);
  } else if (suite == "solar") {
    checks = oracle::verify_solar(seed, 2000);
  } else if (suite == "ssim") {
    checks = oracle::verify_ssim(seed, 50);
  } else if (suite == "gradcheck") {
    checks = oracle::verify_gradcheck(seed, threads);
  } else if (suite == "renderer") {
    checks = oracle::verify_renderer(seed, 10, 3);
  } else {
    throw ValidationError("unknown suite '" + suite +
                          "' (colorspace|solar|ssim|gradcheck|renderer)");
  }
  bool all_pass = true;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "[ ok ] " : "[FAIL] ") << suite << "/" << c.name << ": "
              << c.detail << "\n";
    all_pass = all_pass && c.pass;
  }
  return all_pass ? kExitOk : kExitVerifyFailed;
}

int cmd_sunpos(double lat, double lon, const std::string& time) {
  const solar::GeoTime gt{lat, lon, parse_iso8601_utc(time)};
  const solar::SunPosition p = solar::sun_position(gt);
  std::printf("azimuth: %.3f\nzenith: %.3f\n", p.azimuth_deg, p.zenith_deg);
  if (!solar::above_horizon(p)) std::printf("(sun below horizon)\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised outdoor relighting laboratory"};
  app.require_subcommand(1);

  int threads = relight::default_threads();
  app.add_option("--threads", threads, "Worker threads (1 forces serial execution)")
      ->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "Render a synthetic dataset");
  int gen_scenes = 150;
  std::string gen_positions = "default9";
  std::string gen_size = "64x64";
  uint64_t gen_seed = 0;
  std::string gen_out;
  double gen_test_fraction = 0.1;
  gen->add_option("--scenes", gen_scenes, "Scene count")->capture_default_str();
  gen->add_option("--positions", gen_positions, "default9 or 'az,zen;az,zen;...'")
      ->capture_default_str();
  gen->add_option("--size", gen_size, "Raster size HxW")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Dataset seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--test-fraction", gen_test_fraction, "Held-out scene fraction")
      ->capture_default_str();

  // train-sunest
  auto* ts = app.add_subcommand("train-sunest", "Train the sun-position regressor");
  std::string ts_data, ts_out, ts_log;
  int ts_epochs = 10, ts_batch = 8;
  double ts_lr = 2e-3;
  uint64_t ts_seed = 0;
  std::string ts_dtype = "f32";
  ts->add_option("--data", ts_data, "Dataset manifest")->required();
  ts->add_option("--out", ts_out, "Output checkpoint")->required();
  ts->add_option("--epochs", ts_epochs)->capture_default_str();
  ts->add_option("--lr", ts_lr)->capture_default_str();
  ts->add_option("--batch", ts_batch)->capture_default_str();
  ts->add_option("--seed", ts_seed)->capture_default_str();
  ts->add_option("--log", ts_log, "Training-curve CSV");
  ts->add_option("--dtype", ts_dtype, "f32 or f64")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train the shadow-transfer model");
  std::string tr_data, tr_sunest, tr_out, tr_log;
  std::string tr_ablate = "none";
  int tr_epochs = 30, tr_batch = 8;
  double tr_lr = 2e-4;
  uint64_t tr_seed = 0;
  std::string tr_dtype = "f32";
  tr->add_option("--data", tr_data, "Dataset manifest")->required();
  tr->add_option("--sunest", tr_sunest, "Frozen SunEst checkpoint");
  tr->add_option("--out", tr_out, "Output checkpoint")->required();
  tr->add_option("--epochs", tr_epochs)->capture_default_str();
  tr->add_option("--lr", tr_lr)->capture_default_str();
  tr->add_option("--batch", tr_batch)->capture_default_str();
  tr->add_option("--seed", tr_seed)->capture_default_str();
  tr->add_option("--ablate", tr_ablate, "none|no-sun-loss|depth-only|seg-only")
      ->capture_default_str();
  tr->add_option("--log", tr_log, "Training-curve CSV");
  tr->add_option("--dtype", tr_dtype, "f32 or f64")->capture_default_str();

  // relight
  auto* rl = app.add_subcommand("relight", "Relight a geometry tuple");
  std::string rl_model, rl_depth, rl_semseg, rl_out;
  double rl_az = 0, rl_zen = 30, rl_scale = 0.001;
  rl->add_option("--model", rl_model, "Shadow-transfer checkpoint")->required();
  rl->add_option("--depth", rl_depth, "16-bit depth PGM")->required();
  rl->add_option("--semseg", rl_semseg, "8-bit class PGM")->required();
  rl->add_option("--azimuth", rl_az, "Target azimuth, degrees")->required();
  rl->add_option("--zenith", rl_zen, "Target zenith, degrees")->required();
  rl->add_option("--out", rl_out, "Output PPM")->required();
  rl->add_option("--depth-scale", rl_scale, "Meters per stored depth unit")
      ->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "Per-sun-position MSSIM evaluation");
  std::vector<std::string> ev_models, ev_labels;
  std::string ev_data, ev_report;
  bool ev_baseline = false;
  ev->add_option("--model", ev_models, "Checkpoint (repeatable for comparisons)")
      ->required();
  ev->add_option("--label", ev_labels, "Series label per --model");
  ev->add_option("--data", ev_data, "Dataset manifest")->required();
  ev->add_option("--report", ev_report, "Report output path")->required();
  ev->add_flag("--baseline", ev_baseline, "Add the mean-training-image baseline series");

  // verify
  auto* vf = app.add_subcommand("verify", "Run an independent oracle suite");
  std::string vf_suite;
  uint64_t vf_seed = 7;
  vf->add_option("--suite", vf_suite, "colorspace|solar|ssim|gradcheck|renderer")
      ->required();
  vf->add_option("--seed", vf_seed)->capture_default_str();

  // sunpos
  auto* sp = app.add_subcommand("sunpos", "Sun azimuth/zenith from location and time");
  double sp_lat = 0, sp_lon = 0;
  std::string sp_time;
  sp->add_option("--lat", sp_lat, "Latitude, degrees")->required();
  sp->add_option("--lon", sp_lon, "Longitude, degrees east")->required();
  sp->add_option("--time", sp_time, "UTC time, ISO-8601")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(gen_scenes, gen_positions, gen_size, gen_seed, gen_out,
                     gen_test_fraction, threads);
    }
    if (ts->parsed()) {
      return cmd_train_sunest(ts_data, ts_out, ts_epochs, ts_lr, ts_batch, ts_seed, ts_log,
                              threads, ts_dtype);
    }
    if (tr->parsed()) {
      return cmd_train(tr_data, tr_sunest, tr_out, tr_epochs, tr_lr, tr_batch, tr_seed,
                       tr_ablate, tr_log, threads, tr_dtype);
    }
    if (rl->parsed()) {
      return cmd_relight(rl_model, rl_depth, rl_semseg, rl_az, rl_zen, rl_out, rl_scale);
    }
    if (ev->parsed()) {
      return cmd_eval(ev_models, ev_labels, ev_data, ev_report, ev_baseline, threads);
    }
    if (vf->parsed()) return cmd_verify(vf_suite, vf_seed, threads);
    if (sp->parsed()) return cmd_sunpos(sp_lat, sp_lon, sp_time);
  } catch (const relight::CorruptCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const relight::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const relight::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const relight::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
