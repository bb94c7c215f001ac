#include "cseg/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cseg {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (cell.empty() || used != cell.size()) throw Error("config: bad number '" + cell + "' for " + key);
    out.push_back(v);
  }
  return out;
}

double as_double(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 1) throw Error("config: expected one number for " + key);
  return v[0];
}

int as_int(const std::string& key, const std::string& text) {
  const double v = as_double(key, text);
  if (v != static_cast<double>(static_cast<long long>(v))) throw Error("config: expected an integer for " + key);
  return static_cast<int>(v);
}

template <std::size_t N>
std::array<double, N> as_array(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  std::array<double, N> out{};
  if (v.size() == 1) out.fill(v[0]);
  else if (v.size() == N) std::copy(v.begin(), v.end(), out.begin());
  else throw Error("config: expected 1 or " + std::to_string(N) + " values for " + key);
  return out;
}

Shape3 as_shape(const std::string& key, const std::string& text) {
  const auto a = as_array<3>(key, text);
  for (double v : a) {
    if (v < 1 || v != static_cast<double>(static_cast<int>(v))) throw Error("config: bad extent for " + key);
  }
  return {static_cast<int>(a[0]), static_cast<int>(a[1]), static_cast<int>(a[2])};
}

Plane plane_from_name(const std::string& s) {
  if (s == "axial") return Plane::Axial;
  if (s == "coronal") return Plane::Coronal;
  if (s == "sagittal") return Plane::Sagittal;
  throw Error("config: unknown rotate_plane '" + s + "'");
}

std::string plane_name(Plane p) {
  switch (p) {
    case Plane::Axial: return "axial";
    case Plane::Coronal: return "coronal";
    case Plane::Sagittal: return "sagittal";
  }
  return "?";
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <std::size_t N>
std::string list(const std::array<double, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + num(a[i]);
  return s;
}

std::string shape(Shape3 s) {
  return std::to_string(s.d) + "," + std::to_string(s.h) + "," + std::to_string(s.w);
}

using Setter = void (*)(TrainConfig&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"train.epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.epochs = as_int(k, v); }},
      {"train.batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = as_int(k, v); }},
      {"train.lr_initial", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr_initial = as_double(k, v); }},
      {"train.lr_after_plateau", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr_after_plateau = as_double(k, v); }},
      {"train.plateau_patience_epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.plateau_patience_epochs = as_int(k, v); }},
      {"train.plateau_min_rel_improvement", [](TrainConfig& c, const std::string& k, const std::string& v) { c.plateau_min_rel_improvement = as_double(k, v); }},
      {"train.patch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.patch_size = as_shape(k, v); }},
      {"train.foreground_prob", [](TrainConfig& c, const std::string& k, const std::string& v) { c.foreground_prob = as_double(k, v); }},
      {"train.seed", [](TrainConfig& c, const std::string& k, const std::string& v) {
         const double s = as_double(k, v);
         if (s < 0) throw Error("config: seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"train.keep_checkpoint_every", [](TrainConfig& c, const std::string& k, const std::string& v) { c.keep_checkpoint_every = as_int(k, v); }},
      {"adam.beta1", [](TrainConfig& c, const std::string& k, const std::string& v) { c.adam.beta1 = as_double(k, v); }},
      {"adam.beta2", [](TrainConfig& c, const std::string& k, const std::string& v) { c.adam.beta2 = as_double(k, v); }},
      {"adam.epsilon", [](TrainConfig& c, const std::string& k, const std::string& v) { c.adam.epsilon = as_double(k, v); }},
      {"loss.gamma", [](TrainConfig& c, const std::string& k, const std::string& v) { c.focal.gamma = as_double(k, v); }},
      {"loss.alpha", [](TrainConfig& c, const std::string& k, const std::string& v) { c.focal.alpha = as_double(k, v); }},
      {"loss.epsilon", [](TrainConfig& c, const std::string& k, const std::string& v) { c.focal.epsilon = as_double(k, v); }},
      {"loss.aux_weights", [](TrainConfig& c, const std::string& k, const std::string& v) { c.aux_weights = as_array<3>(k, v); }},
      {"loss.step_weights", [](TrainConfig& c, const std::string& k, const std::string& v) { c.step_weights = as_array<3>(k, v); }},
      {"augment.p_flip_axis", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.p_flip_axis = as_array<3>(k, v); }},
      {"augment.p_rotate", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.p_rotate = as_double(k, v); }},
      {"augment.rotate_max_deg", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.rotate_max_deg = as_double(k, v); }},
      {"augment.rotate_plane", [](TrainConfig& c, const std::string&, const std::string& v) { c.augment.rotate_plane = plane_from_name(v); }},
      {"augment.p_blur", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.p_blur = as_double(k, v); }},
      {"augment.blur_sigma_range", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment.blur_sigma_range = as_array<2>(k, v); }},
      {"cascade.levels", [](TrainConfig& c, const std::string& k, const std::string& v) { c.cascade.levels = as_int(k, v); }},
      {"cascade.base_channels", [](TrainConfig& c, const std::string& k, const std::string& v) { c.cascade.base_channels = as_int(k, v); }},
      {"cascade.norm", [](TrainConfig& c, const std::string&, const std::string& v) { c.cascade.norm = norm_from_name(v); }},
      {"cascade.train_gate", [](TrainConfig& c, const std::string&, const std::string& v) { c.cascade.train_gate = gate_from_name(v); }},
      {"cascade.infer_gate", [](TrainConfig& c, const std::string&, const std::string& v) {
         c.cascade.infer_gate = gate_from_name(v);
         c.infer.gate = c.cascade.infer_gate;
       }},
      {"cascade.gate_threshold", [](TrainConfig& c, const std::string& k, const std::string& v) { c.cascade.gate_threshold = as_double(k, v); }},
      {"infer.patch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.infer.patch_size = as_shape(k, v); }},
      {"infer.stride", [](TrainConfig& c, const std::string& k, const std::string& v) { c.infer.stride = as_shape(k, v); }},
      {"infer.thresholds", [](TrainConfig& c, const std::string& k, const std::string& v) { c.infer.thresholds = as_array<3>(k, v); }},
  };
  return table;
}

void apply(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error("config: unknown key '" + key + "'");
  it->second(cfg, key, trim(value));
}

}  // namespace

void InferConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (patch_size[a] < 1 || stride[a] < 1 || stride[a] > patch_size[a]) {
      throw Error("infer: need 0 < stride <= patch_size on every axis");
    }
  }
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw Error("infer: thresholds must be in (0,1)");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("train: epochs must be >= 1");
  if (batch_size < 1) throw Error("train: batch_size must be >= 1");
  if (!(lr_initial > 0.0) || !(lr_after_plateau > 0.0)) throw Error("train: learning rates must be positive");
  if (plateau_patience_epochs < 1) throw Error("train: plateau_patience_epochs must be >= 1");
  if (!(foreground_prob >= 0.0 && foreground_prob <= 1.0)) throw Error("train: foreground_prob must be in [0,1]");
  if (keep_checkpoint_every < 0) throw Error("train: keep_checkpoint_every must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
    throw Error("adam: invalid hyperparameters");
  }
  focal.validate();
  augment.validate();
  cascade.validate();
  infer.validate();
  const int div = cascade.step_config(0).divisor();
  for (int a = 0; a < 3; ++a) {
    if (patch_size[a] % div != 0) {
      throw Error("train: patch_size must be divisible by " + std::to_string(div));
    }
  }
}

TrainConfig parse_train_config(const std::string& ini_text, const std::vector<std::string>& overrides) {
  TrainConfig cfg;
  pt::ptree tree;
  std::istringstream is(ini_text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  static const std::set<std::string> kSections = {"train", "adam", "loss", "augment", "cascade", "infer"};
  for (const auto& [section, body] : tree) {
    if (!kSections.contains(section)) throw Error("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) throw Error("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) apply(cfg, section + "." + key, value.data());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error("config: override '" + o + "' is not key=value");
    apply(cfg, trim(o.substr(0, eq)), o.substr(eq + 1));
  }
  // Infer gate follows the cascade setting unless set explicitly via cascade.infer_gate.
  cfg.infer.gate = cfg.cascade.infer_gate;
  cfg.validate();
  return cfg;
}

TrainConfig parse_train_config(const std::string& ini_text) { return parse_train_config(ini_text, {}); }

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_train_config(ss.str());
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream os;
  os << "[train]\n"
     << "epochs = " << c.epochs << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "lr_initial = " << num(c.lr_initial) << "\n"
     << "lr_after_plateau = " << num(c.lr_after_plateau) << "\n"
     << "plateau_patience_epochs = " << c.plateau_patience_epochs << "\n"
     << "plateau_min_rel_improvement = " << num(c.plateau_min_rel_improvement) << "\n"
     << "patch_size = " << shape(c.patch_size) << "\n"
     << "foreground_prob = " << num(c.foreground_prob) << "\n"
     << "seed = " << c.seed << "\n"
     << "keep_checkpoint_every = " << c.keep_checkpoint_every << "\n\n"
     << "[adam]\n"
     << "beta1 = " << num(c.adam.beta1) << "\n"
     << "beta2 = " << num(c.adam.beta2) << "\n"
     << "epsilon = " << num(c.adam.epsilon) << "\n\n"
     << "[loss]\n"
     << "gamma = " << num(c.focal.gamma) << "\n"
     << "alpha = " << num(c.focal.alpha) << "\n"
     << "epsilon = " << num(c.focal.epsilon) << "\n"
     << "aux_weights = " << list(c.aux_weights) << "\n"
     << "step_weights = " << list(c.step_weights) << "\n\n"
     << "[augment]\n"
     << "p_flip_axis = " << list(c.augment.p_flip_axis) << "\n"
     << "p_rotate = " << num(c.augment.p_rotate) << "\n"
     << "rotate_max_deg = " << num(c.augment.rotate_max_deg) << "\n"
     << "rotate_plane = " << plane_name(c.augment.rotate_plane) << "\n"
     << "p_blur = " << num(c.augment.p_blur) << "\n"
     << "blur_sigma_range = " << list(c.augment.blur_sigma_range) << "\n\n"
     << "[cascade]\n"
     << "levels = " << c.cascade.levels << "\n"
     << "base_channels = " << c.cascade.base_channels << "\n"
     << "norm = " << norm_name(c.cascade.norm) << "\n"
     << "train_gate = " << gate_name(c.cascade.train_gate) << "\n"
     << "infer_gate = " << gate_name(c.cascade.infer_gate) << "\n"
     << "gate_threshold = " << num(c.cascade.gate_threshold) << "\n\n"
     << "[infer]\n"
     << "patch_size = " << shape(c.infer.patch_size) << "\n"
     << "stride = " << shape(c.infer.stride) << "\n"
     << "thresholds = " << list(c.infer.thresholds) << "\n";
  return os.str();
}

}  // namespace cseg
