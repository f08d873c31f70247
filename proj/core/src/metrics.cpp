#include "relight/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <ostream>

#include "relight/parallel.hpp"

namespace relight::metrics {

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(window);
  const double c = (window - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable valid-region Gaussian filter: out is (h-window+1) x (w-window+1).
void filter_valid(const std::vector<double>& img, int h, int w,
                  const std::vector<double>& k, std::vector<double>& tmp,
                  std::vector<double>& out) {
  const int window = static_cast<int>(k.size());
  const int wv = w - window + 1;
  const int hv = h - window + 1;
  tmp.assign(static_cast<size_t>(h) * wv, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wv; ++x) {
      double acc = 0;
      for (int i = 0; i < window; ++i) acc += k[i] * img[y * w + x + i];
      tmp[y * wv + x] = acc;
    }
  }
  out.assign(static_cast<size_t>(hv) * wv, 0.0);
  for (int y = 0; y < hv; ++y) {
    for (int x = 0; x < wv; ++x) {
      double acc = 0;
      for (int i = 0; i < window; ++i) acc += k[i] * tmp[(y + i) * wv + x];
      out[y * wv + x] = acc;
    }
  }
}

}  // namespace

void validate(const SsimConfig& cfg) {
  if (cfg.window < 3 || cfg.window % 2 == 0) {
    throw ValidationError("SSIM window must be odd and >= 3");
  }
  if (cfg.k1 <= 0 || cfg.k2 <= 0 || cfg.sigma <= 0 || cfg.range <= 0) {
    throw ValidationError("SSIM constants must be positive");
  }
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int height,
                  int width, const SsimConfig& cfg) {
  validate(cfg);
  if (a.size() != b.size() || a.size() != static_cast<size_t>(height) * width) {
    throw ValidationError("ssim: plane sizes disagree");
  }
  if (height < cfg.window || width < cfg.window) {
    throw ValidationError("ssim: image smaller than the window");
  }
  const auto k = gaussian_kernel(cfg.window, cfg.sigma);
  const double c1 = cfg.k1 * cfg.range * cfg.k1 * cfg.range;
  const double c2 = cfg.k2 * cfg.range * cfg.k2 * cfg.range;

  const size_t n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  std::vector<double> tmp, mu_a, mu_b, e_aa, e_bb, e_ab;
  filter_valid(a, height, width, k, tmp, mu_a);
  filter_valid(b, height, width, k, tmp, mu_b);
  filter_valid(aa, height, width, k, tmp, e_aa);
  filter_valid(bb, height, width, k, tmp, e_bb);
  filter_valid(ab, height, width, k, tmp, e_ab);

  double acc = 0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_a.size());
}

double mssim(const RgbImage& a, const RgbImage& b, const SsimConfig& cfg) {
  if (a.height != b.height || a.width != b.width) {
    throw ValidationError("mssim: image dims disagree");
  }
  const size_t n = a.pixels();
  std::vector<double> pa(n), pb(n);
  double acc = 0;
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < n; ++i) {
      pa[i] = a.data[3 * i + c];
      pb[i] = b.data[3 * i + c];
    }
    acc += ssim_plane(pa, pb, a.height, a.width, cfg);
  }
  return acc / 3.0;
}

MssimReport::Series evaluate_series(const std::string& name,
                                    const std::vector<scene::RenderedTuple>& test_tuples,
                                    const RelightFn& fn, const SsimConfig& cfg,
                                    int threads) {
  struct Item {
    bool skipped = true;
    double score = 0;
  };
  std::vector<Item> items(test_tuples.size());
  parallel_for(static_cast<int64_t>(test_tuples.size()), threads, [&](int64_t i) {
    const auto pred = fn(test_tuples[i]);
    if (pred.has_value()) {
      items[i].score = mssim(*pred, test_tuples[i].rgb, cfg);
      items[i].skipped = false;
    }
  });

  MssimReport::Series series;
  series.name = name;
  std::map<PositionKey, std::pair<int64_t, double>> sums;
  int64_t total_n = 0;
  double total_sum = 0;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].skipped) {
      std::cerr << "warning: skipped evaluation of tuple " << i << " (position "
                << test_tuples[i].sun.azimuth_deg << "," << test_tuples[i].sun.zenith_deg
                << ")\n";
      continue;
    }
    const PositionKey key{test_tuples[i].sun.azimuth_deg, test_tuples[i].sun.zenith_deg};
    auto& [cnt, sum] = sums[key];
    cnt += 1;
    sum += items[i].score;
    total_n += 1;
    total_sum += items[i].score;
  }
  for (const auto& [key, cs] : sums) {
    series.per_position[key] = Stat{cs.first, cs.second / cs.first};
  }
  series.global = Stat{total_n, total_n ? total_sum / total_n : 0.0};
  return series;
}

std::map<PositionKey, RgbImage> mean_images_by_position(
    const std::vector<scene::RenderedTuple>& train_tuples) {
  std::map<PositionKey, std::pair<int64_t, RgbImage>> acc;
  for (const auto& t : train_tuples) {
    const PositionKey key{t.sun.azimuth_deg, t.sun.zenith_deg};
    auto it = acc.find(key);
    if (it == acc.end()) {
      it = acc.emplace(key, std::make_pair(int64_t{0}, RgbImage(t.height, t.width))).first;
    }
    if (it->second.second.height != t.height || it->second.second.width != t.width) {
      throw ValidationError("mean_images_by_position: raster dims disagree");
    }
    it->second.first += 1;
    for (size_t i = 0; i < t.rgb.data.size(); ++i) {
      it->second.second.data[i] += t.rgb.data[i];
    }
  }
  std::map<PositionKey, RgbImage> out;
  for (auto& [key, cs] : acc) {
    for (double& v : cs.second.data) v /= static_cast<double>(cs.first);
    out.emplace(key, std::move(cs.second));
  }
  return out;
}

void write_report(std::ostream& out, const MssimReport& report) {
  char buf[128];
  out << "relight-mssim-report/" << MssimReport::kVersion << "\n";
  out << "window: " << report.cfg.window << "\n";
  out << "sigma: " << report.cfg.sigma << "\n";
  out << "k1: " << report.cfg.k1 << "\n";
  out << "k2: " << report.cfg.k2 << "\n";
  out << "range: " << report.cfg.range << "\n";
  out << "color: per-channel-mean\n";
  out << "series:";
  for (const auto& s : report.series) out << " " << s.name;
  out << "\n";

  // Union of position keys across series, in sorted order.
  std::map<PositionKey, int> keys;
  for (const auto& s : report.series) {
    for (const auto& [key, stat] : s.per_position) keys[key] = 1;
  }
  for (const auto& [key, unused] : keys) {
    std::snprintf(buf, sizeof(buf), "[position azimuth=%.10g zenith=%.10g]\n",
                  key.azimuth_deg, key.zenith_deg);
    out << buf;
    for (const auto& s : report.series) {
      const auto it = s.per_position.find(key);
      if (it == s.per_position.end()) continue;
      std::snprintf(buf, sizeof(buf), "%s: %.6f (n=%lld)\n", s.name.c_str(),
                    it->second.mean, static_cast<long long>(it->second.count));
      out << buf;
    }
  }
  out << "[global]\n";
  for (const auto& s : report.series) {
    std::snprintf(buf, sizeof(buf), "%s: %.6f (n=%lld)\n", s.name.c_str(), s.global.mean,
                  static_cast<long long>(s.global.count));
    out << buf;
  }
}

}  // namespace relight::metrics
