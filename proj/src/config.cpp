#include "svad/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace svad {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto bad = [](const std::string& why) { throw std::invalid_argument("config: " + why); };
  if (variant != "svad" && variant != "svad-s") bad("variant must be svad or svad-s");
  if (ablation != "none" && ablation != "no_sconv" && ablation != "no_sconv_no_attn")
    bad("ablation must be none, no_sconv, or no_sconv_no_attn");
  if (n_filters < 1) bad("n_filters must be >= 1");
  if (kernel_len < 3 || kernel_len % 2 == 0) bad("kernel_len must be odd and >= 3");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) bad("conv_kernel must be odd");
  if (fs != 16000.0) bad("fs must be 16000");
  if (frame < 1 || hop < 1 || hop > frame) bad("need 1 <= hop <= frame");
  if (!(alpha >= 0.0 && alpha < 1.0)) bad("alpha must be in [0, 1)");
  if (!(theta > 0.0)) bad("theta must be positive");
  if (!(surrogate_a > 0.0)) bad("surrogate_a must be positive");
  if (lambda < 0.0) bad("lambda must be >= 0");
  if (!(lr0 > 0.0)) bad("lr0 must be positive");
  if (lr_drop_every < 1) bad("lr_drop_every must be >= 1");
  if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0)) bad("lr_drop_factor in (0, 1]");
  if (epochs < 1) bad("epochs must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (grad_clip < 0.0) bad("grad_clip must be >= 0");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) bad("val_frac must be in [0, 1)");
  if (!(e_syn_pj > 0.0 && e_upd_pj > 0.0)) bad("energy constants must be positive");
}

ArchDescriptor RunConfig::to_arch() const {
  validate();
  ArchDescriptor a = make_arch(variant, ablation);
  a.n_filters = n_filters;
  a.kernel_len = kernel_len;
  a.conv_kernel = conv_kernel;
  a.fs = fs;
  a.frames.win = frame;
  a.frames.hop = hop;
  a.lif.alpha = alpha;
  a.lif.theta = theta;
  a.lif.a = surrogate_a;
  a.validate();
  return a;
}

EnergyModel RunConfig::to_energy() const {
  EnergyModel e;
  e.e_syn = e_syn_pj * 1e-12;
  e.e_upd = e_upd_pj * 1e-12;
  e.validate();
  return e;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");

    if (key == "variant") c.variant = val;
    else if (key == "ablation") c.ablation = val;
    else if (key == "n_filters") c.n_filters = static_cast<int>(to_long(key, val));
    else if (key == "kernel_len") c.kernel_len = static_cast<int>(to_long(key, val));
    else if (key == "conv_kernel") c.conv_kernel = static_cast<int>(to_long(key, val));
    else if (key == "fs") c.fs = to_double(key, val);
    else if (key == "frame") c.frame = static_cast<int>(to_long(key, val));
    else if (key == "hop") c.hop = static_cast<int>(to_long(key, val));
    else if (key == "alpha") c.alpha = to_double(key, val);
    else if (key == "theta") c.theta = to_double(key, val);
    else if (key == "surrogate_a") c.surrogate_a = to_double(key, val);
    else if (key == "lambda") c.lambda = to_double(key, val);
    else if (key == "lr0") c.lr0 = to_double(key, val);
    else if (key == "lr_drop_every") c.lr_drop_every = static_cast<int>(to_long(key, val));
    else if (key == "lr_drop_factor") c.lr_drop_factor = to_double(key, val);
    else if (key == "epochs") c.epochs = static_cast<int>(to_long(key, val));
    else if (key == "batch_size") c.batch_size = static_cast<int>(to_long(key, val));
    else if (key == "grad_clip") c.grad_clip = to_double(key, val);
    else if (key == "seed") c.seed = static_cast<uint64_t>(to_long(key, val));
    else if (key == "val_frac") c.val_frac = to_double(key, val);
    else if (key == "e_syn_pj") c.e_syn_pj = to_double(key, val);
    else if (key == "e_upd_pj") c.e_upd_pj = to_double(key, val);
    else
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::string config_text(const RunConfig& c) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string s;
  s += "variant = " + c.variant + "\n";
  s += "ablation = " + c.ablation + "\n";
  s += "n_filters = " + std::to_string(c.n_filters) + "\n";
  s += "kernel_len = " + std::to_string(c.kernel_len) + "\n";
  s += "conv_kernel = " + std::to_string(c.conv_kernel) + "\n";
  s += "fs = " + num(c.fs) + "\n";
  s += "frame = " + std::to_string(c.frame) + "\n";
  s += "hop = " + std::to_string(c.hop) + "\n";
  s += "alpha = " + num(c.alpha) + "\n";
  s += "theta = " + num(c.theta) + "\n";
  s += "surrogate_a = " + num(c.surrogate_a) + "\n";
  s += "lambda = " + num(c.lambda) + "\n";
  s += "lr0 = " + num(c.lr0) + "\n";
  s += "lr_drop_every = " + std::to_string(c.lr_drop_every) + "\n";
  s += "lr_drop_factor = " + num(c.lr_drop_factor) + "\n";
  s += "epochs = " + std::to_string(c.epochs) + "\n";
  s += "batch_size = " + std::to_string(c.batch_size) + "\n";
  s += "grad_clip = " + num(c.grad_clip) + "\n";
  s += "seed = " + std::to_string(c.seed) + "\n";
  s += "val_frac = " + num(c.val_frac) + "\n";
  s += "e_syn_pj = " + num(c.e_syn_pj) + "\n";
  s += "e_upd_pj = " + num(c.e_upd_pj) + "\n";
  return s;
}

}  // namespace svad
