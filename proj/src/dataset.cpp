#include "vps/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vps/png_io.hpp"
#include "vps/rng.hpp"

namespace vps {

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

CameraIntrinsics intrinsics_from(const nlohmann::json& j) {
  return {j.at("f").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>()};
}

}  // namespace

DatasetIndex load_dataset_index(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto j = read_json((fs::path(dir) / "index.json").string());
  DatasetIndex idx;
  idx.root = dir;
  idx.image_size = j.at("image_size").get<int>();
  idx.intrinsics = intrinsics_from(j.at("intrinsics"));
  for (const auto& s : j.at("samples")) {
    DatasetSample d;
    d.id = s.at("id").get<std::string>();
    d.image_path = (fs::path(dir) / s.at("image").get<std::string>()).string();
    d.label_path = (fs::path(dir) / s.at("label").get<std::string>()).string();
    d.seed = s.at("seed").get<uint64_t>();
    idx.samples.push_back(std::move(d));
  }
  return idx;
}

SampleLabel load_label(const std::string& path) {
  const auto j = read_json(path);
  SampleLabel lbl;
  lbl.intrinsics = intrinsics_from(j.at("intrinsics"));
  lbl.seed = j.value("seed", uint64_t(0));
  for (const auto& d : j.at("directions")) {
    lbl.directions.push_back(
        UnitDirection::normalized(d.at(0).get<double>(), d.at(1).get<double>(),
                                  d.at(2).get<double>()));
  }
  return lbl;
}

Tensor4 load_image_normalized(const std::string& path) {
  const GrayImage img = read_gray_png(path);
  Tensor4 t(1, 1, img.height, img.width);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    t.val[i] = static_cast<Real>(img.pixels[i] / 255.0 * 2.0 - 1.0);
  }
  return t;
}

bool is_val_sample(const DatasetSample& s, double val_fraction) {
  const uint64_t h = mix_seed(s.seed ^ 0xda7a5e7ull);
  return static_cast<double>(h % 1000000) < val_fraction * 1000000.0;
}

}  // namespace vps
