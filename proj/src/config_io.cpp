#include "lfdeblur/config_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lfdeblur {

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int n = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_line(ToolConfig& cfg, const std::string& key, const std::string& value) {
  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  SynthConfig& s = cfg.synth;
  if (key == "model.views_u") m.views_u = to_int(key, value);
  else if (key == "model.views_v") m.views_v = to_int(key, value);
  else if (key == "model.channels") m.channels = to_int(key, value);
  else if (key == "model.kernel") m.kernel = to_int(key, value);
  else if (key == "model.gen_hidden") m.gen_hidden = to_int(key, value);
  else if (key == "model.num_blocks") m.num_blocks = to_int(key, value);
  else if (key == "model.angular_kernel") m.angular_kernel = to_int(key, value);
  else if (key == "model.attention_hidden") m.attention_hidden = to_int(key, value);
  else if (key == "model.use_vasc") m.use_vasc = to_bool(key, value);
  else if (key == "model.use_dpva") m.use_dpva = to_bool(key, value);
  else if (key == "model.use_ape") m.use_ape = to_bool(key, value);
  else if (key == "model.global_residual") m.global_residual = to_bool(key, value);
  else if (key == "train.batch_size") t.batch_size = to_int(key, value);
  else if (key == "train.patch_x") t.patch_x = to_int(key, value);
  else if (key == "train.patch_y") t.patch_y = to_int(key, value);
  else if (key == "train.base_lr") t.base_lr = to_double(key, value);
  else if (key == "train.warm_epochs") t.warm_epochs = to_int(key, value);
  else if (key == "train.decay_every") t.decay_every = to_int(key, value);
  else if (key == "train.decay_factor") t.decay_factor = to_double(key, value);
  else if (key == "train.total_epochs") t.total_epochs = to_int(key, value);
  else if (key == "train.seed") t.seed = to_u64(key, value);
  else if (key == "train.augment") t.augment = to_bool(key, value);
  else if (key == "train.patches_per_scene") t.patches_per_scene = to_int(key, value);
  else if (key == "train.ckpt_every") t.ckpt_every = to_int(key, value);
  else if (key == "train.log_every") t.log_every = to_int(key, value);
  else if (key == "synth.dof") s.dof = to_int(key, value);
  else if (key == "synth.trans_mag") s.trans_mag = to_double(key, value);
  else if (key == "synth.rot_mag") s.rot_mag = to_double(key, value);
  else if (key == "synth.samples") s.samples = to_int(key, value);
  else if (key == "synth.seed") s.seed = to_u64(key, value);
  else if (key == "synth.disparity") s.disparity = to_double(key, value);
  else if (key == "synth.baseline") s.baseline = to_double(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

ToolConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  ToolConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string serialize_config(const ToolConfig& cfg) {
  std::ostringstream os;
  const ModelConfig& m = cfg.model;
  const TrainConfig& t = cfg.train;
  const SynthConfig& s = cfg.synth;
  os << "model.views_u = " << m.views_u << "\n";
  os << "model.views_v = " << m.views_v << "\n";
  os << "model.channels = " << m.channels << "\n";
  os << "model.kernel = " << m.kernel << "\n";
  os << "model.gen_hidden = " << m.gen_hidden << "\n";
  os << "model.num_blocks = " << m.num_blocks << "\n";
  os << "model.angular_kernel = " << m.angular_kernel << "\n";
  os << "model.attention_hidden = " << m.attention_hidden << "\n";
  os << "model.use_vasc = " << (m.use_vasc ? "true" : "false") << "\n";
  os << "model.use_dpva = " << (m.use_dpva ? "true" : "false") << "\n";
  os << "model.use_ape = " << (m.use_ape ? "true" : "false") << "\n";
  os << "model.global_residual = " << (m.global_residual ? "true" : "false") << "\n";
  os << "train.batch_size = " << t.batch_size << "\n";
  os << "train.patch_x = " << t.patch_x << "\n";
  os << "train.patch_y = " << t.patch_y << "\n";
  os << "train.base_lr = " << t.base_lr << "\n";
  os << "train.warm_epochs = " << t.warm_epochs << "\n";
  os << "train.decay_every = " << t.decay_every << "\n";
  os << "train.decay_factor = " << t.decay_factor << "\n";
  os << "train.total_epochs = " << t.total_epochs << "\n";
  os << "train.seed = " << t.seed << "\n";
  os << "train.augment = " << (t.augment ? "true" : "false") << "\n";
  os << "train.patches_per_scene = " << t.patches_per_scene << "\n";
  os << "train.ckpt_every = " << t.ckpt_every << "\n";
  os << "train.log_every = " << t.log_every << "\n";
  os << "synth.dof = " << s.dof << "\n";
  os << "synth.trans_mag = " << s.trans_mag << "\n";
  os << "synth.rot_mag = " << s.rot_mag << "\n";
  os << "synth.samples = " << s.samples << "\n";
  os << "synth.seed = " << s.seed << "\n";
  os << "synth.disparity = " << s.disparity << "\n";
  os << "synth.baseline = " << s.baseline << "\n";
  return os.str();
}

}  // namespace lfdeblur
