#include "fdt/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fdt {

void VideoDataset::validate() const {
  if (videos.empty()) throw std::invalid_argument("dataset has no videos");
  std::vector<bool> seen(videos.size(), false);
  for (const auto& v : videos) {
    if (v.frames.empty()) throw std::invalid_argument("video '" + v.name + "' has no frames");
    if (v.frames.size() != v.ground_truth.size())
      throw std::invalid_argument("video '" + v.name + "' has " + std::to_string(v.frames.size()) + " frames but " +
                                  std::to_string(v.ground_truth.size()) + " ground-truth boxes");
    if (v.domain < 0 || v.domain >= static_cast<int>(videos.size()) || seen[static_cast<std::size_t>(v.domain)])
      throw std::invalid_argument("domain indices must be dense 0..k-1 and unique");
    seen[static_cast<std::size_t>(v.domain)] = true;
  }
}

namespace {

using Rgb = std::array<double, 3>;

/// Target appearance: a bold two-colour checker overlaid with a few blobs.
std::vector<Rgb> make_texture(int w, int h, int texture) {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(texture) * 1000003ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto bright = [&] { return Rgb{40 + 215 * u(rng), 40 + 215 * u(rng), 40 + 215 * u(rng)}; };
  const Rgb a = bright(), b = bright();
  const int cell = 6 + static_cast<int>(u(rng) * 8);
  std::vector<Rgb> tex(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) tex[static_cast<std::size_t>(y) * w + x] = ((x / cell + y / cell) % 2) ? a : b;
  for (int k = 0; k < 3; ++k) {
    const Rgb col = bright();
    const double cx = u(rng) * w, cy = u(rng) * h, r = (0.15 + 0.2 * u(rng)) * std::min(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (std::hypot(x - cx, y - cy) < r) tex[static_cast<std::size_t>(y) * w + x] = col;
  }
  // dark frame so the patch has a crisp outline
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (x < 2 || y < 2 || x >= w - 2 || y >= h - 2) tex[static_cast<std::size_t>(y) * w + x] = Rgb{10, 10, 10};
  return tex;
}

/// Low-contrast background: a handful of smooth sinusoids around mid grey.
std::vector<Rgb> make_background(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
    int channel;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i)
    waves.push_back({(u(rng) - 0.5) * 0.15, (u(rng) - 0.5) * 0.15, u(rng) * 2 * std::numbers::pi, 10 + 15 * u(rng),
                     static_cast<int>(u(rng) * 3)});
  std::vector<Rgb> bg(static_cast<std::size_t>(w) * h, Rgb{110, 110, 110});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Rgb& p = bg[static_cast<std::size_t>(y) * w + x];
      for (const auto& wv : waves) {
        const double v = wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
        for (int c = 0; c < 3; ++c) p[static_cast<std::size_t>(c)] += c == wv.channel ? v : 0.4 * v;
      }
    }
  return bg;
}

}  // namespace

Video make_synthetic_video(const SyntheticConfig& cfg, int texture, int domain, std::uint64_t seed) {
  if (cfg.width < kMinSyntheticSize || cfg.height < kMinSyntheticSize)
    throw std::invalid_argument("synthetic frames must be at least " + std::to_string(kMinSyntheticSize) +
                                " px per side for the conv trunk");
  if (cfg.target_w < 4 || cfg.target_h < 4 || cfg.target_w > cfg.width || cfg.target_h > cfg.height)
    throw std::invalid_argument("synthetic target must fit inside the frame");
  if (cfg.frames < 1) throw std::invalid_argument("synthetic video needs at least one frame");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto tex = make_texture(cfg.target_w, cfg.target_h, texture);
  const auto bg = make_background(cfg.width, cfg.height, rng);

  const double max_x = cfg.width - cfg.target_w, max_y = cfg.height - cfg.target_h;
  double px = max_x * (0.25 + 0.5 * u(rng)), py = max_y * (0.25 + 0.5 * u(rng));
  const double heading = u(rng) * 2 * std::numbers::pi;
  double vx = cfg.speed * std::cos(heading), vy = cfg.speed * std::sin(heading);

  Video v;
  v.name = "synthetic-" + std::to_string(texture);
  v.domain = domain;
  for (int f = 0; f < cfg.frames; ++f) {
    const int ox = static_cast<int>(std::lround(px)), oy = static_cast<int>(std::lround(py));
    Image img(cfg.width, cfg.height, 3);
    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x) {
        const bool in_target = x >= ox && x < ox + cfg.target_w && y >= oy && y < oy + cfg.target_h;
        const Rgb& src = in_target ? tex[static_cast<std::size_t>(y - oy) * cfg.target_w + (x - ox)]
                                   : bg[static_cast<std::size_t>(y) * cfg.width + x];
        for (int c = 0; c < 3; ++c) {
          const double val = src[static_cast<std::size_t>(c)] + cfg.noise * noise(rng);
          img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
        }
      }
    v.frames.push_back(std::move(img));
    v.ground_truth.push_back({static_cast<double>(ox), static_cast<double>(oy), static_cast<double>(cfg.target_w),
                              static_cast<double>(cfg.target_h)});
    px += vx;
    py += vy;
    if (px < 0 || px > max_x) {
      vx = -vx;
      px = std::clamp(px, 0.0, max_x);
    }
    if (py < 0 || py > max_y) {
      vy = -vy;
      py = std::clamp(py, 0.0, max_y);
    }
  }
  return v;
}

VideoDataset make_synthetic_dataset(const SyntheticConfig& cfg) {
  if (cfg.videos < 1) throw std::invalid_argument("synthetic dataset needs at least one video");
  VideoDataset ds;
  for (int i = 0; i < cfg.videos; ++i)
    ds.videos.push_back(make_synthetic_video(cfg, cfg.texture_base + i, i, cfg.seed * 7919 + static_cast<std::uint64_t>(i)));
  return ds;
}

}  // namespace fdt
