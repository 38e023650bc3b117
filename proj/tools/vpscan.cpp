// vpscan: vanishing point detection via conic convolutions.
// Subcommands cover the full pipeline: synthesize a line-scene dataset,
// train the classifier, run the coarse-to-fine detector, evaluate angle
// accuracy, inspect the cap sampler, and benchmark the conic kernels.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vps/bench.hpp"
#include "vps/config.hpp"
#include "vps/parallel.hpp"
#include "vps/pipeline.hpp"
#include "vps/serialize.hpp"
#include "vps/sphere.hpp"
#include "vps/synth.hpp"

namespace {

using namespace vps;

std::ofstream open_or_die(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  return out;
}

void cmd_synth(const RunConfig& cfg, int count, const std::string& out_dir) {
  generate_dataset(cfg.scene_spec(), count, out_dir);
  std::cout << "wrote " << count << " samples to " << out_dir << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& dataset,
               const std::string& out_model, const std::string& log_csv) {
  const TrainStats stats = train_model(cfg, dataset, out_model, &std::cerr, log_csv);
  std::cout << "trained " << stats.epochs << " epochs (" << stats.steps
            << " steps) in " << stats.seconds << " s, final loss "
            << stats.final_epoch_loss << "; model: " << out_model << "\n";
}

void cmd_detect(const RunConfig& cfg, const std::string& model_path,
                const std::string& image, const std::string& image_id,
                const std::string& dataset, const std::string& split,
                const std::string& out_path) {
  VpsModel model = VpsModel::load(model_path);
  std::vector<ImagePrediction> preds;
  if (!image.empty()) {
    check_model_matches(model, cfg);
    const Tensor4 img = load_image_normalized(image);
    if (img.h != cfg.image_size || img.w != cfg.image_size) {
      throw std::runtime_error(image + ": image size does not match the config");
    }
    const auto schedule = derive_threshold_schedule(cfg.search_config());
    preds.push_back(detect_single(model, cfg.search_config(), schedule,
                                  cfg.intrinsics(), img,
                                  image_id.empty()
                                      ? std::filesystem::path(image).stem().string()
                                      : image_id));
  } else {
    preds = detect_on_dataset(cfg, model, dataset, split, &std::cerr);
  }
  const nlohmann::json j = predictions_to_json(preds);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    open_or_die(out_path) << j.dump(2) << "\n";
    std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
  }
}

void cmd_eval(const RunConfig& cfg, const std::string& pred_path,
              const std::string& dataset, const std::string& out_prefix) {
  std::ifstream in(pred_path);
  if (!in) throw std::runtime_error(pred_path + ": cannot open");
  const auto preds = predictions_from_json(nlohmann::json::parse(in));
  const EvalOutput out = evaluate_predictions(cfg, preds, dataset);
  const nlohmann::json summary = summary_to_json(out.summary);
  if (!out_prefix.empty()) {
    auto curve = open_or_die(out_prefix + ".curve.csv");
    write_aa_curve_csv(curve, out.curve);
    open_or_die(out_prefix + ".summary.json") << summary.dump(2) << "\n";
  }
  std::cout << summary.dump(2) << "\n";
}

void cmd_sample(int count, double gamma, const std::string& center_arg,
                const std::string& out_path) {
  UnitDirection center = UnitDirection::raw(0, 0, 1);
  if (!center_arg.empty()) {
    double x, y, z;
    if (std::sscanf(center_arg.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3) {
      throw std::runtime_error("--center expects x,y,z");
    }
    center = UnitDirection::normalized(x, y, z);
  }
  const SphericalCap cap{center, gamma};
  const auto pts = fibonacci_cap_sample(cap, count);
  std::ostringstream csv;
  csv << "n,x,y,z,phi,theta\n";
  const double golden = (1.0 + std::sqrt(5.0)) * kPi;
  for (int n = 0; n < count; ++n) {
    const double phi = angular_distance(pts[n], center);
    const double theta = std::fmod(golden * n, 2.0 * kPi);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.9f,%.9f,%.9f,%.9f\n", n, pts[n].x,
                  pts[n].y, pts[n].z, phi, theta);
    csv << buf;
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    open_or_die(out_path) << csv.str();
  }
}

void cmd_bench(int batch, int channels, int size, const std::string& workers_arg,
               int repeats, const std::string& out_path) {
  std::vector<int> workers;
  std::stringstream ss(workers_arg);
  std::string item;
  while (std::getline(ss, item, ',')) workers.push_back(std::stoi(item));
  const auto rows = run_conic_bench(batch, channels, size, size, workers, repeats);
  if (out_path.empty()) {
    write_bench_csv(std::cout, rows);
  } else {
    auto out = open_or_die(out_path);
    write_bench_csv(out, rows);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vanishing point scanner: conic-convolution detector pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", overrides, "override a config key, e.g. --set rounds=5");

  auto* synth = app.add_subcommand("synth", "generate a synthetic line-scene dataset");
  int synth_count = 100;
  std::string synth_out;
  synth->add_option("--count", synth_count, "number of samples")->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train a candidate classifier");
  std::string train_dataset, train_out, train_log;
  train->add_option("--dataset", train_dataset, "dataset directory")->required();
  train->add_option("--out", train_out, "output model path")->required();
  train->add_option("--log", train_log, "training log CSV path");

  auto* detect = app.add_subcommand("detect", "detect vanishing points");
  std::string det_model, det_image, det_id, det_dataset, det_out;
  std::string det_split = "val";
  detect->add_option("--model", det_model, "model file")->required();
  detect->add_option("--image", det_image, "single PNG image");
  detect->add_option("--id", det_id, "image id recorded in the output");
  detect->add_option("--dataset", det_dataset, "dataset directory");
  detect->add_option("--split", det_split, "train | val | all");
  detect->add_option("--out", det_out, "predictions JSON path (stdout otherwise)");

  auto* eval = app.add_subcommand("eval", "score predictions against labels");
  std::string eval_preds, eval_dataset, eval_prefix;
  eval->add_option("--predictions", eval_preds, "predictions JSON")->required();
  eval->add_option("--dataset", eval_dataset, "dataset directory")->required();
  eval->add_option("--out-prefix", eval_prefix, "write PREFIX.curve.csv and PREFIX.summary.json");

  auto* sample = app.add_subcommand("sample", "dump a spherical-cap lattice as CSV");
  int sample_count = 64;
  double sample_gamma = kPi / 2;
  std::string sample_center, sample_out;
  sample->add_option("--count", sample_count, "lattice size");
  sample->add_option("--gamma", sample_gamma, "cap polar angle in radians");
  sample->add_option("--center", sample_center, "cap center as x,y,z");
  sample->add_option("--out", sample_out, "CSV path (stdout otherwise)");

  auto* bench = app.add_subcommand("bench", "benchmark the conic kernels");
  int bench_batch = 1, bench_channels = 64, bench_size = 64, bench_repeats = 5;
  std::string bench_workers = "1,2,4,8", bench_out;
  bench->add_option("--batch", bench_batch, "batch size");
  bench->add_option("--channels", bench_channels, "input and output channels");
  bench->add_option("--size", bench_size, "square map side");
  bench->add_option("--workers", bench_workers, "comma-separated worker counts");
  bench->add_option("--repeats", bench_repeats, "timing repetitions");
  bench->add_option("--out", bench_out, "CSV path (stdout otherwise)");

  auto* config_cmd = app.add_subcommand("config", "print the default configuration");
  std::string config_out;
  config_cmd->add_option("--out", config_out, "file path (stdout otherwise)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) cfg.apply_override(kv);
    cfg.validate();
    set_num_workers(cfg.workers);

    if (synth->parsed()) {
      cmd_synth(cfg, synth_count, synth_out);
    } else if (train->parsed()) {
      cmd_train(cfg, train_dataset, train_out, train_log);
    } else if (detect->parsed()) {
      if (det_image.empty() == det_dataset.empty()) {
        throw std::runtime_error("detect: pass exactly one of --image or --dataset");
      }
      cmd_detect(cfg, det_model, det_image, det_id, det_dataset, det_split, det_out);
    } else if (eval->parsed()) {
      cmd_eval(cfg, eval_preds, eval_dataset, eval_prefix);
    } else if (sample->parsed()) {
      cmd_sample(sample_count, sample_gamma, sample_center, sample_out);
    } else if (bench->parsed()) {
      cmd_bench(bench_batch, bench_channels, bench_size, bench_workers,
                bench_repeats, bench_out);
    } else if (config_cmd->parsed()) {
      if (config_out.empty()) {
        RunConfig::write_defaults(std::cout);
      } else {
        auto out = open_or_die(config_out);
        RunConfig::write_defaults(out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
