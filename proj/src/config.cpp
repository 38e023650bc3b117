#include "vps/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vps {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& v) {
  size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
  return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& v) {
  size_t pos = 0;
  const unsigned long long x = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
  return x;
}

double parse_double(const std::string& v) {
  size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a bool: " + v);
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& v, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(trim(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

struct KeyDef {
  const char* name;
  const char* doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  char buf[32];
  for (size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%g", v[i]);
    s += (i ? "," : "") + std::string(buf);
  }
  return s;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"image_size", "square image side in pixels",
       [](RunConfig& c, const std::string& v) { c.image_size = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.image_size); }},
      {"focal", "focal length in pixels; 0 picks half the image width",
       [](RunConfig& c, const std::string& v) { c.focal = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.focal); }},
      {"seed", "master seed for every random stream",
       [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"workers", "worker threads; 0 = all cores",
       [](RunConfig& c, const std::string& v) { c.workers = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.workers); }},

      {"vp_count", "vanishing points per synthetic scene (1-3)",
       [](RunConfig& c, const std::string& v) { c.vp_count = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.vp_count); }},
      {"orthogonal_vps", "force a mutually orthogonal direction triad",
       [](RunConfig& c, const std::string& v) { c.orthogonal_vps = parse_bool(v); },
       [](const RunConfig& c) { return c.orthogonal_vps ? "true" : "false"; }},
      {"lines_per_vp", "structural lines rendered per vanishing point",
       [](RunConfig& c, const std::string& v) { c.lines_per_vp = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.lines_per_vp); }},
      {"clutter_lines", "distractor lines with free orientation",
       [](RunConfig& c, const std::string& v) { c.clutter_lines = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.clutter_lines); }},
      {"line_width", "stroke width in pixels",
       [](RunConfig& c, const std::string& v) { c.line_width = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.line_width); }},
      {"intensity_min", "lower bound of per-line brightness",
       [](RunConfig& c, const std::string& v) { c.intensity_min = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.intensity_min); }},
      {"intensity_max", "upper bound of per-line brightness",
       [](RunConfig& c, const std::string& v) { c.intensity_max = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.intensity_max); }},
      {"noise_sigma", "additive Gaussian pixel noise",
       [](RunConfig& c, const std::string& v) { c.noise_sigma = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.noise_sigma); }},

      {"backbone_stem", "width of the 7x7 stem convolution",
       [](RunConfig& c, const std::string& v) { c.backbone_stem = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.backbone_stem); }},
      {"feat_channels", "backbone output channels",
       [](RunConfig& c, const std::string& v) { c.feat_channels = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.feat_channels); }},
      {"reduce_channels", "channels after the head's 1x1 reduction",
       [](RunConfig& c, const std::string& v) { c.reduce_channels = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.reduce_channels); }},
      {"stage_channels", "output width of each head stage, comma separated",
       [](RunConfig& c, const std::string& v) { c.stage_channels = parse_list<int>(v, parse_int); },
       [](const RunConfig& c) { return join_ints(c.stage_channels); }},
      {"fc_dims", "widths of the two hidden fully connected blocks",
       [](RunConfig& c, const std::string& v) { c.fc_dims = parse_list<int>(v, parse_int); },
       [](const RunConfig& c) { return join_ints(c.fc_dims); }},
      {"head_mode", "conic = rotated sampling grids; plain = ordinary convs "
                    "with the direction appended as channels",
       [](RunConfig& c, const std::string& v) {
         if (v != "conic" && v != "plain") throw std::invalid_argument("head_mode must be conic or plain");
         c.head_mode = v;
       },
       [](const RunConfig& c) { return c.head_mode; }},

      {"rounds", "coarse-to-fine rounds; also the classifier output width",
       [](RunConfig& c, const std::string& v) { c.rounds = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.rounds); }},
      {"samples_per_round", "lattice points scored per round",
       [](RunConfig& c, const std::string& v) { c.samples_per_round = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.samples_per_round); }},
      {"rho", "cap shrink factor applied to the lattice covering angle",
       [](RunConfig& c, const std::string& v) { c.rho = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.rho); }},
      {"top_k", "vanishing points returned per image",
       [](RunConfig& c, const std::string& v) { c.top_k = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.top_k); }},
      {"covering_grid", "grid density multiplier for the covering estimate",
       [](RunConfig& c, const std::string& v) { c.covering_grid = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.covering_grid); }},
      {"min_separation", "pairwise seed separation in radians; 0 = auto",
       [](RunConfig& c, const std::string& v) { c.min_separation = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.min_separation); }},

      {"n_pos", "positive candidates per ground truth per threshold",
       [](RunConfig& c, const std::string& v) { c.n_pos = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.n_pos); }},
      {"n_neg", "annulus negatives per ground truth per threshold",
       [](RunConfig& c, const std::string& v) { c.n_neg = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.n_neg); }},
      {"n_rand", "hemisphere-uniform candidates per image",
       [](RunConfig& c, const std::string& v) { c.n_rand = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.n_rand); }},
      {"lr", "Adam learning rate",
       [](RunConfig& c, const std::string& v) { c.lr = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.lr); }},
      {"weight_decay", "L2 coefficient folded into the gradient",
       [](RunConfig& c, const std::string& v) { c.weight_decay = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.weight_decay); }},
      {"epochs", "training epochs",
       [](RunConfig& c, const std::string& v) { c.epochs = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.epochs); }},
      {"batch_size", "images per optimizer step",
       [](RunConfig& c, const std::string& v) { c.batch_size = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.batch_size); }},
      {"lr_decay_epoch", "epoch where lr drops 10x; 0 = never",
       [](RunConfig& c, const std::string& v) { c.lr_decay_epoch = parse_int(v); },
       [](const RunConfig& c) { return std::to_string(c.lr_decay_epoch); }},
      {"val_fraction", "fraction of samples held out by seed hash",
       [](RunConfig& c, const std::string& v) { c.val_fraction = parse_double(v); },
       [](const RunConfig& c) { return fmt_double(c.val_fraction); }},

      {"aa_thresholds_deg", "angle-accuracy integration limits in degrees",
       [](RunConfig& c, const std::string& v) { c.aa_thresholds_deg = parse_list<double>(v, parse_double); },
       [](const RunConfig& c) { return join_doubles(c.aa_thresholds_deg); }},
  };
  return table;
}

const KeyDef& find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (name == k.name) return k;
  }
  std::string msg = "unknown config key: " + name + " (valid keys:";
  for (const auto& k : key_table()) msg += std::string(" ") + k.name;
  throw std::invalid_argument(msg + ")");
}

}  // namespace

SceneSpec RunConfig::scene_spec() const {
  SceneSpec s;
  s.image_size = image_size;
  s.focal = effective_focal();
  s.num_vps = vp_count;
  s.orthogonal_vps = orthogonal_vps;
  s.lines_per_vp = lines_per_vp;
  s.clutter_lines = clutter_lines;
  s.line_width = line_width;
  s.intensity_min = intensity_min;
  s.intensity_max = intensity_max;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  return s;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.image_size = image_size;
  m.input_channels = 1;
  m.backbone_stem = backbone_stem;
  m.feat_channels = feat_channels;
  m.reduce_channels = reduce_channels;
  m.stage_channels = stage_channels;
  m.fc_dims = fc_dims;
  m.num_thresholds = rounds;
  m.plain_head = head_mode == "plain";
  return m;
}

SearchConfig RunConfig::search_config() const {
  SearchConfig s;
  s.rounds = rounds;
  s.samples_per_round = samples_per_round;
  s.rho = rho;
  s.top_k = top_k;
  s.covering_grid = covering_grid;
  s.min_separation = min_separation;
  return s;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      find_key(key).set(*this, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate();
}

void RunConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got: " + kv);
  find_key(trim(kv.substr(0, eq))).set(*this, trim(kv.substr(eq + 1)));
}

void RunConfig::validate() const {
  if (image_size < 64) throw std::invalid_argument("config: image_size must be >= 64");
  if (focal < 0) throw std::invalid_argument("config: focal must be >= 0");
  if (vp_count < 1 || vp_count > 3) throw std::invalid_argument("config: vp_count must be 1-3");
  if (orthogonal_vps && vp_count != 3) {
    throw std::invalid_argument("config: orthogonal_vps requires vp_count = 3");
  }
  if (intensity_min > intensity_max) throw std::invalid_argument("config: intensity bounds reversed");
  if (head_mode != "conic" && head_mode != "plain") {
    throw std::invalid_argument("config: head_mode must be conic or plain");
  }
  if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
  if (samples_per_round < 2) throw std::invalid_argument("config: samples_per_round must be >= 2");
  if (rho < 1.0) throw std::invalid_argument("config: rho must be >= 1");
  if (top_k < 1) throw std::invalid_argument("config: top_k must be >= 1");
  if (n_pos < 0 || n_neg < 0 || n_rand < 0) throw std::invalid_argument("config: negative sample counts");
  if (epochs < 1 || batch_size < 1) throw std::invalid_argument("config: epochs and batch_size must be >= 1");
  if (val_fraction < 0 || val_fraction >= 1) throw std::invalid_argument("config: val_fraction must be in [0, 1)");
  if (fc_dims.size() != 2) throw std::invalid_argument("config: fc_dims needs exactly 2 entries");
  for (double t : aa_thresholds_deg) {
    if (t <= 0) throw std::invalid_argument("config: aa thresholds must be > 0");
  }
}

void RunConfig::write_defaults(std::ostream& out) {
  const RunConfig defaults;
  out << "# vpscan run configuration; every key with its default.\n";
  for (const auto& k : key_table()) {
    out << "# " << k.doc << "\n" << k.name << " = " << k.get(defaults) << "\n";
  }
}

}  // namespace vps
