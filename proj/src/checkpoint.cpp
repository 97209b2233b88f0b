#include "svad/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace svad {

namespace {

struct ArraySlot {
  std::string name;
  std::vector<uint32_t> dims;
  float* f = nullptr;    // exactly one of f/d is set
  double* d = nullptr;
  size_t len = 0;
};

// The authoritative array list: names and order match visit_arrays, dims
// carry the logical shapes. Loading validates dims against the descriptor's
// architecture, which defines these same shapes.
std::vector<ArraySlot> array_table(ModelParams<float>& m) {
  std::vector<ArraySlot> t;
  auto vec_d = [&](const char* name, std::vector<double>& v) {
    t.push_back({name, {static_cast<uint32_t>(v.size())}, nullptr, v.data(), v.size()});
  };
  auto vec_f = [&](const char* name, std::vector<float>& v) {
    t.push_back({name, {static_cast<uint32_t>(v.size())}, v.data(), nullptr, v.size()});
  };
  auto mat_f = [&](const std::string& name, Mat<float>& mt) {
    t.push_back({name,
                 {static_cast<uint32_t>(mt.rows), static_cast<uint32_t>(mt.cols)},
                 mt.v.data(),
                 nullptr,
                 mt.v.size()});
  };
  vec_d("sinc.f1", m.bank.f1_norm);
  vec_d("sinc.band", m.bank.band_norm);
  if (m.arch.use_sconv) {
    mat_f("sconv.w", m.enc.sconv.weights.w);
    vec_f("sconv.b", m.enc.sconv.weights.b);
  }
  for (size_t i = 0; i < m.enc.attn.size(); ++i) {
    const std::string base = "attn" + std::to_string(i);
    mat_f(base + ".w", m.enc.attn[i].weights.w);
    vec_f((base + ".b").c_str(), m.enc.attn[i].weights.b);
  }
  mat_f("hidden.w", m.hidden.weights.w);
  vec_f("hidden.b", m.hidden.weights.b);
  mat_f("hidden.w_rec", m.hidden.weights.w_rec);
  mat_f("readout.w", m.w_out);
  vec_f("readout.b", m.b_out);
  return t;
}

void put_u32(std::string& s, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8 & 0xff),
               static_cast<char>(v >> 16 & 0xff), static_cast<char>(v >> 24 & 0xff)};
  s.append(b, 4);
}

void put_f32(std::string& s, float v) {
  static_assert(sizeof(float) == 4);
  char b[4];
  std::memcpy(b, &v, 4);  // little-endian build targets only
  s.append(b, 4);
}

struct Reader {
  const unsigned char* p;
  size_t n;
  size_t off = 0;
  const std::string& path;

  void need(size_t k, const char* what) const {
    if (off + k > n)
      throw std::runtime_error("checkpoint " + path + ": truncated " + what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = static_cast<uint32_t>(p[off]) | static_cast<uint32_t>(p[off + 1]) << 8 |
                 static_cast<uint32_t>(p[off + 2]) << 16 |
                 static_cast<uint32_t>(p[off + 3]) << 24;
    off += 4;
    return v;
  }
  float f32(const char* what) {
    need(4, what);
    float v;
    std::memcpy(&v, p + off, 4);
    off += 4;
    return v;
  }
  std::string bytes(size_t k, const char* what) {
    need(k, what);
    std::string s(reinterpret_cast<const char*>(p + off), k);
    off += k;
    return s;
  }
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> parse_descriptor(const std::string& text,
                                                    const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("checkpoint " + path + ": bad descriptor line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams<float>& params,
                     const TrainState* train) {
  params.arch.validate();
  const ArchDescriptor& a = params.arch;
  std::string desc;
  desc += "variant=" + a.variant + "\n";
  desc += "n_filters=" + std::to_string(a.n_filters) + "\n";
  desc += "kernel_len=" + std::to_string(a.kernel_len) + "\n";
  desc += "conv_kernel=" + std::to_string(a.conv_kernel) + "\n";
  desc += std::string("use_sconv=") + (a.use_sconv ? "1" : "0") + "\n";
  desc += "attn_layers=" + std::to_string(a.attn_layers) + "\n";
  desc += "n_hidden=" + std::to_string(a.n_hidden) + "\n";
  desc += "n_classes=" + std::to_string(a.n_classes) + "\n";
  desc += "fs=" + fmt_double(a.fs) + "\n";
  desc += "frame=" + std::to_string(a.frames.win) + "\n";
  desc += "hop=" + std::to_string(a.frames.hop) + "\n";
  desc += "alpha=" + fmt_double(a.lif.alpha) + "\n";
  desc += "theta=" + fmt_double(a.lif.theta) + "\n";
  desc += "surrogate_a=" + fmt_double(a.lif.a) + "\n";
  if (train && train->present) {
    desc += "epoch=" + std::to_string(train->epoch) + "\n";
    desc += "opt_t=" + std::to_string(train->opt.t) + "\n";
  }

  auto table = array_table(params);
  std::string out;
  out.append(kCkptMagic, sizeof kCkptMagic);
  put_u32(out, kCkptVersion);
  put_u32(out, static_cast<uint32_t>(desc.size()));
  out += desc;

  auto emit = [&](const std::string& name, const std::vector<uint32_t>& dims,
                  const float* f, const double* d, size_t len) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(dims.size()));
    size_t prod = 1;
    for (uint32_t v : dims) {
      put_u32(out, v);
      prod *= v;
    }
    require_eq(prod, len, "checkpoint: dims/len mismatch for " + name);
    for (size_t i = 0; i < len; ++i)
      put_f32(out, f ? f[i] : static_cast<float>(d[i]));
  };

  uint32_t count = static_cast<uint32_t>(table.size());
  std::vector<std::pair<std::string, std::vector<double>>> opt_arrays;
  if (train && train->present && !train->opt.m.empty()) {
    require_eq(train->opt.m.size(), table.size(), "checkpoint: optimizer slot count");
    count += 2 * static_cast<uint32_t>(table.size());
  }
  put_u32(out, count);
  for (auto& slot : table) emit(slot.name, slot.dims, slot.f, slot.d, slot.len);
  if (train && train->present && !train->opt.m.empty()) {
    for (size_t i = 0; i < table.size(); ++i) {
      emit("opt.m." + table[i].name, table[i].dims, nullptr, train->opt.m[i].data(),
           train->opt.m[i].size());
      emit("opt.v." + table[i].name, table[i].dims, nullptr, train->opt.v[i].data(),
           train->opt.v[i].size());
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

ModelParams<float> load_checkpoint(const std::string& path, TrainState* train_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size(), 0, path};

  if (r.bytes(sizeof kCkptMagic, "magic") != std::string(kCkptMagic, sizeof kCkptMagic))
    throw std::runtime_error("checkpoint " + path + ": bad magic");
  const uint32_t version = r.u32("version");
  if (version != kCkptVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " +
                             std::to_string(version));
  const uint32_t desc_len = r.u32("descriptor length");
  auto kv = parse_descriptor(r.bytes(desc_len, "descriptor"), path);

  auto want = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw std::runtime_error("checkpoint " + path + ": missing descriptor key " + key);
    return it->second;
  };
  ArchDescriptor a;
  a.variant = want("variant");
  a.n_filters = std::stoi(want("n_filters"));
  a.kernel_len = std::stoi(want("kernel_len"));
  a.conv_kernel = std::stoi(want("conv_kernel"));
  a.use_sconv = want("use_sconv") == "1";
  a.attn_layers = std::stoi(want("attn_layers"));
  a.n_hidden = std::stoi(want("n_hidden"));
  a.n_classes = std::stoi(want("n_classes"));
  a.fs = std::stod(want("fs"));
  a.frames.win = std::stoi(want("frame"));
  a.frames.hop = std::stoi(want("hop"));
  a.lif.alpha = std::stod(want("alpha"));
  a.lif.theta = std::stod(want("theta"));
  a.lif.a = std::stod(want("surrogate_a"));
  a.validate();

  // Shape holder; every parameter array is overwritten below.
  ModelParams<float> m = init_params<float>(a, 0);
  auto table = array_table(m);
  std::vector<bool> seen(table.size(), false);
  TrainState ts;
  if (kv.count("epoch")) ts.epoch = std::stol(kv.at("epoch"));
  if (kv.count("opt_t")) ts.opt.t = std::stol(kv.at("opt_t"));
  ts.opt.m.resize(table.size());
  ts.opt.v.resize(table.size());
  bool any_opt = false;

  const uint32_t n_arrays = r.u32("array count");
  for (uint32_t i = 0; i < n_arrays; ++i) {
    const uint32_t name_len = r.u32("array name length");
    const std::string name = r.bytes(name_len, "array name");
    const uint32_t rank = r.u32("array rank");
    std::vector<uint32_t> dims(rank);
    size_t len = 1;
    for (uint32_t k = 0; k < rank; ++k) {
      dims[k] = r.u32("array dim");
      len *= dims[k];
    }
    std::string base = name;
    int opt_kind = 0;  // 1 = first moment, 2 = second moment
    if (name.rfind("opt.m.", 0) == 0) {
      base = name.substr(6);
      opt_kind = 1;
    } else if (name.rfind("opt.v.", 0) == 0) {
      base = name.substr(6);
      opt_kind = 2;
    }
    size_t slot = table.size();
    for (size_t s = 0; s < table.size(); ++s)
      if (table[s].name == base) slot = s;
    if (slot == table.size())
      throw std::runtime_error("checkpoint " + path + ": unknown array " + name);
    if (dims != table[slot].dims)
      throw std::runtime_error("checkpoint " + path + ": shape mismatch for " + name);

    if (opt_kind == 0) {
      if (seen[slot])
        throw std::runtime_error("checkpoint " + path + ": duplicate array " + name);
      seen[slot] = true;
      for (size_t k = 0; k < len; ++k) {
        const float v = r.f32("array data");
        if (table[slot].f) table[slot].f[k] = v;
        else table[slot].d[k] = static_cast<double>(v);
      }
    } else {
      any_opt = true;
      auto& dst = opt_kind == 1 ? ts.opt.m[slot] : ts.opt.v[slot];
      dst.resize(len);
      for (size_t k = 0; k < len; ++k) dst[k] = static_cast<double>(r.f32("array data"));
    }
  }
  for (size_t s = 0; s < table.size(); ++s)
    if (!seen[s])
      throw std::runtime_error("checkpoint " + path + ": missing array " + table[s].name);
  if (r.off != r.n)
    throw std::runtime_error("checkpoint " + path + ": trailing bytes");

  if (train_out) {
    ts.present = any_opt || kv.count("epoch") > 0;
    if (!any_opt) {
      ts.opt.m.clear();
      ts.opt.v.clear();
    } else {
      for (size_t s = 0; s < table.size(); ++s)
        if (ts.opt.m[s].size() != table[s].len || ts.opt.v[s].size() != table[s].len)
          throw std::runtime_error("checkpoint " + path + ": incomplete optimizer state");
    }
    *train_out = std::move(ts);
  }
  return m;
}

}  // namespace svad
