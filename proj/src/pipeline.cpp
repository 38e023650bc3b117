#include "vps/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "vps/png_io.hpp"
#include "vps/rng.hpp"

namespace vps {

namespace {

using Clock = std::chrono::steady_clock;

struct LoadedSample {
  std::string id;
  std::vector<uint8_t> pixels;  // quantized grayscale, normalized at batch time
  std::vector<UnitDirection> directions;
  uint64_t seed = 0;
};

std::vector<LoadedSample> load_split(const DatasetIndex& index, double val_fraction,
                                     bool want_val) {
  std::vector<LoadedSample> out;
  for (const auto& s : index.samples) {
    if (is_val_sample(s, val_fraction) != want_val) continue;
    LoadedSample ls;
    ls.id = s.id;
    ls.seed = s.seed;
    const GrayImage img = read_gray_png(s.image_path);
    if (img.width != index.image_size || img.height != index.image_size) {
      throw std::runtime_error(s.image_path + ": size does not match the index");
    }
    ls.pixels = img.pixels;
    ls.directions = load_label(s.label_path).directions;
    out.push_back(std::move(ls));
  }
  return out;
}

void fill_image_row(Tensor4& batch, int row, const std::vector<uint8_t>& pixels) {
  Real* dst = batch.val.data() + batch.idx(row, 0, 0, 0);
  for (size_t i = 0; i < pixels.size(); ++i) {
    dst[i] = static_cast<Real>(pixels[i] / 255.0 * 2.0 - 1.0);
  }
}

nlohmann::json schedule_meta(const RunConfig& cfg, const ThresholdSchedule& schedule) {
  return {{"thresholds", schedule.thresholds},
          {"cap_angles", schedule.cap_angles},
          {"rounds", cfg.rounds},
          {"samples_per_round", cfg.samples_per_round},
          {"rho", cfg.rho},
          {"image_size", cfg.image_size},
          {"intrinsics",
           {{"f", cfg.effective_focal()},
            {"cx", cfg.intrinsics().cx},
            {"cy", cfg.intrinsics().cy}}},
          {"intrinsics_convention",
           "origin at the top-left pixel center, u right, v down, pixel "
           "centers on integers"}};
}

}  // namespace

TrainStats train_model(const RunConfig& cfg, const std::string& dataset_dir,
                       const std::string& out_model, std::ostream* progress,
                       const std::string& log_csv) {
  const auto t0 = Clock::now();
  const DatasetIndex index = load_dataset_index(dataset_dir);
  if (index.image_size != cfg.image_size) {
    throw std::runtime_error("train: config image_size " + std::to_string(cfg.image_size) +
                             " does not match dataset " + std::to_string(index.image_size));
  }
  const auto train_set = load_split(index, cfg.val_fraction, false);
  if (train_set.empty()) throw std::runtime_error("train: training split is empty");

  const ThresholdSchedule schedule = derive_threshold_schedule(cfg.search_config());
  const CameraIntrinsics K = index.intrinsics;

  VpsModel model(cfg.model_config());
  model.init_weights(cfg.seed);
  auto params = model.params();
  AdamConfig adam;
  adam.weight_decay = static_cast<Real>(cfg.weight_decay);

  std::ofstream csv;
  if (!log_csv.empty()) {
    csv.open(log_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error(log_csv + ": cannot write training log");
    csv << "epoch,loss,seconds\n";
  }

  TrainStats stats;
  int64_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto e0 = Clock::now();
    adam.lr = static_cast<Real>(
        cfg.lr_decay_epoch > 0 && epoch >= cfg.lr_decay_epoch ? cfg.lr * 0.1 : cfg.lr);

    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed + 0x5e55ull * epoch));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }

    double epoch_loss = 0;
    int64_t epoch_batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsize = static_cast<int>(
          std::min<size_t>(cfg.batch_size, order.size() - start));
      Tensor4 images(bsize, 1, cfg.image_size, cfg.image_size);
      std::vector<std::vector<CandidateLabel>> cands(bsize);
      for (int b = 0; b < bsize; ++b) {
        const LoadedSample& s = train_set[order[start + b]];
        fill_image_row(images, b, s.pixels);
        // candidate stream keyed on (sample, epoch) so batch composition
        // cannot change the draws
        Rng cand_rng(mix_seed(s.seed ^ mix_seed(cfg.seed + 0xca9dull * epoch)));
        for (size_t t = 0; t < schedule.thresholds.size(); ++t) {
          auto part = sample_training_candidates(
              s.directions, schedule.thresholds[t], cfg.n_pos, cfg.n_neg,
              t == 0 ? cfg.n_rand : 0, schedule.thresholds, cand_rng);
          cands[b].insert(cands[b].end(), part.begin(), part.end());
        }
      }
      zero_grads(params);
      epoch_loss += model.train_forward_backward(images, cands, K);
      adam_step(params, adam, ++step);
      ++epoch_batches;
    }
    epoch_loss /= static_cast<double>(std::max<int64_t>(1, epoch_batches));
    const double esec = std::chrono::duration<double>(Clock::now() - e0).count();
    if (progress) {
      *progress << "epoch " << epoch << "/" << cfg.epochs << " loss " << epoch_loss
                << " lr " << adam.lr << " (" << esec << " s)\n";
    }
    if (csv) csv << epoch << "," << epoch_loss << "," << esec << "\n";
    stats.final_epoch_loss = epoch_loss;
  }
  stats.epochs = cfg.epochs;
  stats.steps = step;
  stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  const nlohmann::json meta = schedule_meta(cfg, schedule);
  model.save(out_model, meta);
  std::ofstream sidecar(out_model + ".json");
  if (!sidecar) throw std::runtime_error(out_model + ".json: cannot write sidecar");
  nlohmann::json side = meta;
  side["model"] = model.config().to_json();
  sidecar << side.dump(2) << "\n";
  return stats;
}

void check_model_matches(const VpsModel& model, const RunConfig& cfg) {
  if (model.config().num_thresholds != cfg.rounds) {
    throw std::runtime_error(
        "model/threshold mismatch: model has " +
        std::to_string(model.config().num_thresholds) +
        " threshold outputs but the config asks for rounds = " +
        std::to_string(cfg.rounds));
  }
  if (model.config().image_size != cfg.image_size) {
    throw std::runtime_error("model expects image_size " +
                             std::to_string(model.config().image_size) +
                             " but the config says " + std::to_string(cfg.image_size));
  }
}

ImagePrediction detect_single(VpsModel& model, const SearchConfig& scfg,
                              const ThresholdSchedule& schedule,
                              const CameraIntrinsics& K, const Tensor4& image,
                              const std::string& image_id) {
  ModelScorer scorer(model, image, K);
  const DetectResult res = detect(scorer, scfg, schedule);
  ImagePrediction pred;
  pred.image_id = image_id;
  pred.underfilled = res.underfilled;
  pred.head_evaluations = scorer.head_evaluations();
  for (const auto& det : res.detections) {
    pred.directions.push_back(det.direction);
    pred.scores.push_back(det.score);
    pred.image_points.push_back(direction_to_vp(det.direction, K));
  }
  return pred;
}

std::vector<ImagePrediction> detect_on_dataset(const RunConfig& cfg,
                                               VpsModel& model,
                                               const std::string& dataset_dir,
                                               const std::string& split,
                                               std::ostream* progress) {
  if (split != "train" && split != "val" && split != "all") {
    throw std::invalid_argument("detect: split must be train, val or all");
  }
  check_model_matches(model, cfg);
  const DatasetIndex index = load_dataset_index(dataset_dir);
  if (index.image_size != cfg.image_size) {
    throw std::runtime_error("detect: dataset image_size mismatch");
  }
  const SearchConfig scfg = cfg.search_config();
  const ThresholdSchedule schedule = derive_threshold_schedule(scfg);

  std::vector<ImagePrediction> preds;
  size_t done = 0, total = 0;
  for (const auto& s : index.samples) {
    if (split == "all" || (split == "val") == is_val_sample(s, cfg.val_fraction)) ++total;
  }
  for (const auto& s : index.samples) {
    if (split != "all" && (split == "val") != is_val_sample(s, cfg.val_fraction)) continue;
    const Tensor4 image = load_image_normalized(s.image_path);
    preds.push_back(detect_single(model, scfg, schedule, index.intrinsics, image, s.id));
    ++done;
    if (progress && (done % 50 == 0 || done == total)) {
      *progress << "detect " << done << "/" << total << "\n";
    }
  }
  return preds;
}

nlohmann::json predictions_to_json(std::span<const ImagePrediction> preds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : preds) {
    nlohmann::json jp;
    jp["image_id"] = p.image_id;
    auto& dirs = jp["directions"] = nlohmann::json::array();
    for (const auto& d : p.directions) dirs.push_back({d.x, d.y, d.z});
    jp["scores"] = p.scores;
    auto& pts = jp["image_points"] = nlohmann::json::array();
    for (const auto& ip : p.image_points) {
      if (ip) {
        pts.push_back({ip->u, ip->v});
      } else {
        pts.push_back(nullptr);
      }
    }
    out.push_back(std::move(jp));
  }
  return out;
}

std::vector<ImagePrediction> predictions_from_json(const nlohmann::json& j) {
  std::vector<ImagePrediction> out;
  for (const auto& jp : j) {
    ImagePrediction p;
    p.image_id = jp.at("image_id").get<std::string>();
    for (const auto& d : jp.at("directions")) {
      p.directions.push_back(UnitDirection::normalized(
          d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()));
    }
    if (jp.contains("scores")) p.scores = jp.at("scores").get<std::vector<double>>();
    out.push_back(std::move(p));
  }
  return out;
}

EvalOutput evaluate_predictions(const RunConfig& cfg,
                                std::span<const ImagePrediction> preds,
                                const std::string& dataset_dir) {
  const DatasetIndex index = load_dataset_index(dataset_dir);
  std::map<std::string, std::string> label_paths;
  for (const auto& s : index.samples) label_paths[s.id] = s.label_path;

  EvalOutput out;
  for (const auto& p : preds) {
    const auto it = label_paths.find(p.image_id);
    if (it == label_paths.end()) {
      throw std::runtime_error("eval: prediction references unknown image_id " + p.image_id);
    }
    const SampleLabel label = load_label(it->second);
    out.curve.merge(match_predictions(p.directions, label.directions));
  }
  std::vector<double> thresholds;
  for (double deg : cfg.aa_thresholds_deg) thresholds.push_back(deg * kPi / 180.0);
  out.summary = summarize(out.curve, thresholds);
  return out;
}

nlohmann::json summary_to_json(const EvalSummary& summary) {
  nlohmann::json aa = nlohmann::json::object();
  for (const auto& [thr, value] : summary.aa) {
    char key[32];
    std::snprintf(key, sizeof(key), "%g", thr * 180.0 / kPi);
    aa[key] = value;
  }
  return {{"count", summary.count},
          {"unmatched_gts", summary.unmatched_gts},
          {"mean_deg", summary.mean_error * 180.0 / kPi},
          {"median_deg", summary.median_error * 180.0 / kPi},
          {"aa_deg", aa}};
}

}  // namespace vps
