#include "vps/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vps/png_io.hpp"
#include "vps/rng.hpp"
#include "vps/sphere.hpp"

namespace vps {

namespace {

// Anti-aliased stroke with a one-pixel linear coverage ramp; max-blended so
// crossings do not bloom.
void stroke(std::vector<Real>& img, int s, double x0, double y0, double x1,
            double y1, double half_width, double intensity) {
  const double pad = half_width + 1.5;
  const int xmin = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - pad)));
  const int xmax = std::min(s - 1, static_cast<int>(std::ceil(std::max(x0, x1) + pad)));
  const int ymin = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - pad)));
  const int ymax = std::min(s - 1, static_cast<int>(std::ceil(std::max(y0, y1) + pad)));
  const double dx = x1 - x0, dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  for (int y = ymin; y <= ymax; ++y) {
    for (int x = xmin; x <= xmax; ++x) {
      double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double px = x0 + t * dx, py = y0 + t * dy;
      const double d = std::hypot(x - px, y - py);
      const double cov = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
      if (cov > 0) {
        Real& cell = img[static_cast<size_t>(y) * s + x];
        cell = std::max(cell, static_cast<Real>(cov * intensity));
      }
    }
  }
}

ImagePoint line_target(const UnitDirection& d, const CameraIntrinsics& K) {
  if (const auto v = direction_to_vp(d, K)) return *v;
  const double n = std::hypot(d.x, d.y);
  return {K.cx + 1e6 * d.x / n, K.cy + 1e6 * d.y / n};
}

std::vector<UnitDirection> draw_directions(const SceneSpec& spec, Rng& rng) {
  std::vector<UnitDirection> out;
  const SphericalCap hemisphere{UnitDirection::raw(0, 0, 1), kPi / 2};
  if (spec.orthogonal_vps) {
    if (spec.num_vps != 3) {
      throw std::invalid_argument("generate_scene: orthogonal_vps needs num_vps == 3");
    }
    const UnitDirection d1 = sample_cap_uniform(hemisphere, rng);
    const auto [a, b] = orthonormal_basis(d1);
    const double t = rng.uniform(0.0, 2.0 * kPi);
    const UnitDirection d2 = UnitDirection::raw(std::cos(t) * a.x + std::sin(t) * b.x,
                                                std::cos(t) * a.y + std::sin(t) * b.y,
                                                std::cos(t) * a.z + std::sin(t) * b.z);
    const UnitDirection d3 = cross(d1, d2);
    out = {d1.canonical(), d2.canonical(), d3.canonical()};
  } else {
    for (int i = 0; i < spec.num_vps; ++i) out.push_back(sample_cap_uniform(hemisphere, rng));
  }
  return out;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  if (spec.image_size < 64) throw std::invalid_argument("generate_scene: image_size must be >= 64");
  if (spec.num_vps < 1 || spec.num_vps > 3) {
    throw std::invalid_argument("generate_scene: num_vps must be in [1, 3]");
  }
  if (spec.lines_per_vp < 0 || spec.clutter_lines < 0) {
    throw std::invalid_argument("generate_scene: negative line count");
  }

  Rng rng(spec.seed);
  const int s = spec.image_size;
  const CameraIntrinsics K = spec.intrinsics();

  Scene scene;
  scene.image = Tensor4(1, 1, s, s);
  scene.directions = draw_directions(spec, rng);
  auto& img = scene.image.val;

  const double margin = 4.0;
  const double halfw = spec.line_width / 2.0;
  int vp_index = 0;
  for (const UnitDirection& d : scene.directions) {
    const ImagePoint v = line_target(d, K);
    for (int l = 0; l < spec.lines_per_vp; ++l) {
      const double ax = rng.uniform(margin, s - 1 - margin);
      const double ay = rng.uniform(margin, s - 1 - margin);
      const double dist = std::hypot(v.u - ax, v.v - ay);
      const double ux = (v.u - ax) / dist, uy = (v.v - ay) / dist;
      // segments stop short of the vanishing point: a physical segment's
      // projection approaches it but never crosses
      const double toward = std::min(rng.uniform(0.25, 0.8) * s, dist - margin);
      const double away = rng.uniform(0.25, 0.8) * s;
      const double inten = rng.uniform(spec.intensity_min, spec.intensity_max);
      if (toward <= 1.0) continue;  // anchor landed essentially on the vp
      const RenderedLine line{ax - away * ux, ay - away * uy, ax + toward * ux,
                              ay + toward * uy, vp_index};
      stroke(img, s, line.x0, line.y0, line.x1, line.y1, halfw, inten);
      scene.lines.push_back(line);
    }
    ++vp_index;
  }
  for (int l = 0; l < spec.clutter_lines; ++l) {
    const double ax = rng.uniform(margin, s - 1 - margin);
    const double ay = rng.uniform(margin, s - 1 - margin);
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const double half_len = rng.uniform(0.1, 0.3) * s;
    const double inten = rng.uniform(spec.intensity_min, spec.intensity_max);
    const RenderedLine line{ax - half_len * std::cos(theta),
                            ay - half_len * std::sin(theta),
                            ax + half_len * std::cos(theta),
                            ay + half_len * std::sin(theta), -1};
    stroke(img, s, line.x0, line.y0, line.x1, line.y1, halfw, inten);
    scene.lines.push_back(line);
  }
  if (spec.noise_sigma > 0) {
    for (auto& cell : img) {
      cell = static_cast<Real>(
          std::clamp(static_cast<double>(cell) + spec.noise_sigma * rng.normal(), 0.0, 1.0));
    }
  }
  return scene;
}

uint64_t sample_seed(uint64_t dataset_seed, int index) {
  return mix_seed(dataset_seed + 0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(index) + 1));
}

void generate_dataset(const SceneSpec& spec_template, int count,
                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  fs::create_directories(fs::path(out_dir) / "labels", ec);
  if (ec) throw std::runtime_error(out_dir + ": cannot create dataset directories");

  const CameraIntrinsics K = spec_template.intrinsics();
  nlohmann::json index;
  index["version"] = 1;
  index["count"] = count;
  index["image_size"] = spec_template.image_size;
  index["intrinsics"] = {{"f", K.f}, {"cx", K.cx}, {"cy", K.cy}};
  auto& samples = index["samples"] = nlohmann::json::array();

  for (int i = 0; i < count; ++i) {
    SceneSpec spec = spec_template;
    spec.seed = sample_seed(spec_template.seed, i);
    const Scene scene = generate_scene(spec);

    char id[16];
    std::snprintf(id, sizeof(id), "%06d", i);
    const std::string image_rel = std::string("images/") + id + ".png";
    const std::string label_rel = std::string("labels/") + id + ".json";

    GrayImage png;
    png.width = spec.image_size;
    png.height = spec.image_size;
    png.pixels.resize(scene.image.size());
    for (size_t p = 0; p < png.pixels.size(); ++p) {
      png.pixels[p] = static_cast<uint8_t>(
          std::lround(std::clamp(static_cast<double>(scene.image.val[p]), 0.0, 1.0) * 255.0));
    }
    write_gray_png((fs::path(out_dir) / image_rel).string(), png);

    nlohmann::json label;
    label["version"] = 1;
    label["seed"] = spec.seed;
    label["intrinsics"] = {{"f", K.f}, {"cx", K.cx}, {"cy", K.cy}};
    auto& dirs = label["directions"] = nlohmann::json::array();
    for (const auto& d : scene.directions) dirs.push_back({d.x, d.y, d.z});
    std::ofstream lf(fs::path(out_dir) / label_rel);
    if (!lf) throw std::runtime_error((fs::path(out_dir) / label_rel).string() + ": cannot write");
    lf << label.dump(2) << "\n";

    samples.push_back({{"id", id}, {"image", image_rel}, {"label", label_rel}, {"seed", spec.seed}});
  }

  std::ofstream idx(fs::path(out_dir) / "index.json");
  if (!idx) throw std::runtime_error(out_dir + "/index.json: cannot write");
  idx << index.dump(2) << "\n";
}

}  // namespace vps
