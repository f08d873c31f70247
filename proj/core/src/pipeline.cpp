#include "relight/pipeline.hpp"

#include <ostream>

namespace relight::train {

void validate(const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0) throw ValidationError("learning rate must be > 0");
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!cfg.use_depth_input && !cfg.use_semseg_input) {
    throw ValidationError("at least one of depth/semseg inputs must be enabled");
  }
}

TrainConfig sunest_defaults() {
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 2e-3;
  cfg.batch_size = 8;
  return cfg;
}

TrainConfig shadow_transfer_defaults() {
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 2e-4;
  cfg.batch_size = 8;
  return cfg;
}

TrainLogFn make_csv_logger(std::ostream& out) {
  out << "step,epoch,l1_l,l1_ab,perceptual,style,sunest,total\n";
  return [&out](const TrainLogEntry& e) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<long long>(e.step), e.epoch, e.losses.l1_l, e.losses.l1_ab,
                  e.losses.perceptual, e.losses.style, e.losses.sunest, e.losses.total);
    out << buf;
  };
}

}  // namespace relight::train
