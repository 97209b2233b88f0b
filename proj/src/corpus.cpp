#include "svad/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "svad/tensor.hpp"
#include "svad/wav.hpp"

namespace svad {

namespace {

constexpr double kFs = 16000.0;

// Uniform draws derived from raw mt19937_64 output words instead of
// std::uniform_*_distribution, whose mapping is implementation defined:
// corpora must be identical across standard libraries.
double urand(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double urange(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * urand(rng);
}

long uint_below(std::mt19937_64& rng, long n) {
  return static_cast<long>(rng() % static_cast<uint64_t>(n));
}

double peak(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

// Harmonic complex with 1/h amplitude tilt, slow amplitude modulation, and
// raised-cosine onset/offset ramps; peak-normalized to `amp`.
void add_voiced_segment(std::mt19937_64& rng, std::vector<double>& x, long s0, long s1,
                        double amp) {
  const double f0 = urange(rng, 100.0, 250.0);
  const double f_am = urange(rng, 2.0, 8.0);
  const double phi_am = urange(rng, 0.0, 2.0 * M_PI);
  const int n_h = std::max(1, static_cast<int>(4000.0 / f0));
  std::vector<double> phase(n_h);
  for (int h = 0; h < n_h; ++h) phase[h] = urange(rng, 0.0, 2.0 * M_PI);

  const long len = s1 - s0;
  double ramp_s = urange(rng, 0.010, 0.030);
  long ramp = std::min(static_cast<long>(ramp_s * kFs), len / 2);
  std::vector<double> seg(len);
  for (long i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / kFs;
    double v = 0.0;
    for (int h = 0; h < n_h; ++h)
      v += std::sin(2.0 * M_PI * f0 * (h + 1) * t + phase[h]) / (h + 1);
    v *= 1.0 + 0.5 * std::sin(2.0 * M_PI * f_am * t + phi_am);
    double env = 1.0;
    if (i < ramp) env = 0.5 - 0.5 * std::cos(M_PI * (i + 0.5) / ramp);
    else if (i >= len - ramp) env = 0.5 - 0.5 * std::cos(M_PI * (len - i - 0.5) / ramp);
    seg[i] = v * env;
  }
  const double pk = peak(seg);
  const double scale = pk > 0.0 ? amp / pk : 0.0;
  for (long i = 0; i < len; ++i) x[s0 + i] += seg[i] * scale;
}

std::vector<double> make_noise(std::mt19937_64& rng, long n, std::string* kind) {
  const long pick = uint_below(rng, 4);
  std::vector<double> y(n);
  if (pick == 0) {
    *kind = "white";
    for (long i = 0; i < n; ++i) y[i] = urange(rng, -1.0, 1.0);
  } else if (pick == 1) {
    // Low-emphasis noise with a broadband floor; a steeper slope would bury
    // the whole band under the per-utterance normalization at low SNR.
    *kind = "pink";
    const double pole = urange(rng, 0.6, 0.85);
    double state = 0.0;
    for (long i = 0; i < n; ++i) {
      state = pole * state + (1.0 - pole) * urange(rng, -1.0, 1.0);
      y[i] = state + 0.35 * urange(rng, -1.0, 1.0);
    }
  } else if (pick == 2) {
    *kind = "tones";
    const long n_tones = 3 + uint_below(rng, 4);
    std::vector<double> freq(n_tones), phase(n_tones);
    for (long k = 0; k < n_tones; ++k) {
      freq[k] = urange(rng, 300.0, 4000.0);
      phase[k] = urange(rng, 0.0, 2.0 * M_PI);
    }
    for (long i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      double v = 0.0;
      for (long k = 0; k < n_tones; ++k) v += std::sin(2.0 * M_PI * freq[k] * t + phase[k]);
      y[i] = v / static_cast<double>(n_tones);
    }
  } else {
    // Interfering talker: a continuous harmonic complex pitched above the
    // foreground voice range, with vibrato and partial-depth modulation.
    *kind = "talker";
    const double f0 = urange(rng, 260.0, 420.0);
    const double vib_hz = urange(rng, 0.3, 1.0);
    const double vib_depth = urange(rng, 0.01, 0.03);
    const double phi_vib = urange(rng, 0.0, 2.0 * M_PI);
    const double f_am = urange(rng, 1.0, 4.0);
    const double am_depth = urange(rng, 0.3, 0.6);
    const double phi_am = urange(rng, 0.0, 2.0 * M_PI);
    const int n_h = std::max(1, static_cast<int>(4500.0 / f0));
    std::vector<double> phase(n_h);
    for (int h = 0; h < n_h; ++h) phase[h] = urange(rng, 0.0, 2.0 * M_PI);
    std::vector<double> arg(n_h, 0.0);
    for (long i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      const double inst = f0 * (1.0 + vib_depth * std::sin(2.0 * M_PI * vib_hz * t + phi_vib));
      double v = 0.0;
      for (int h = 0; h < n_h; ++h) {
        arg[h] += 2.0 * M_PI * inst * (h + 1) / kFs;
        v += std::sin(arg[h] + phase[h]) / (h + 1);
      }
      y[i] = v * (1.0 + am_depth * std::sin(2.0 * M_PI * f_am * t + phi_am));
    }
  }
  return y;
}

void write_text_atomic(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
    f << body;
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

}  // namespace

const std::vector<double> kLowSnrs = {15.0, 10.0};
const std::vector<double> kMediumSnrs = {5.0, 0.0};
const std::vector<double> kHighSnrs = {-5.0, -10.0};

double rms(const std::vector<float>& x) {
  require(!x.empty(), "rms: empty signal");
  double sq = 0.0;
  for (float v : x) sq += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sq / static_cast<double>(x.size()));
}

std::vector<float> mix_at_snr(const std::vector<float>& clean,
                              const std::vector<float>& noise, double snr_db) {
  require(!clean.empty(), "mix_at_snr: empty clean signal");
  require(noise.size() >= clean.size(), "mix_at_snr: noise shorter than clean");
  std::vector<float> cropped(noise.begin(), noise.begin() + static_cast<long>(clean.size()));
  const double rms_c = rms(clean);
  const double rms_n = rms(cropped);
  require(rms_c > 0.0, "mix_at_snr: clean signal has zero energy");
  require(rms_n > 0.0, "mix_at_snr: noise signal has zero energy");
  const double g = rms_c / (rms_n * std::pow(10.0, snr_db / 20.0));
  std::vector<float> out(clean.size());
  for (size_t i = 0; i < clean.size(); ++i)
    out[i] = clean[i] + static_cast<float>(g) * cropped[i];
  return out;
}

std::vector<int> make_labels(const std::vector<uint8_t>& speech_mask,
                             const FrameSpec& spec) {
  const int T = frame_count(static_cast<int>(speech_mask.size()), spec);
  std::vector<int> labels(T);
  for (int t = 0; t < T; ++t) {
    long count = 0;
    const long s0 = static_cast<long>(t) * spec.hop;
    for (int s = 0; s < spec.win; ++s) count += speech_mask[s0 + s] != 0;
    labels[t] = 2 * count >= spec.win ? 1 : 0;
  }
  return labels;
}

std::vector<uint8_t> mask_to_samples(const std::vector<std::pair<long, long>>& spans,
                                     long n_samples) {
  std::vector<uint8_t> m(n_samples, 0);
  for (const auto& [s0, s1] : spans) {
    require(s0 >= 0 && s0 <= s1 && s1 <= n_samples, "mask span out of range");
    std::fill(m.begin() + s0, m.begin() + s1, static_cast<uint8_t>(1));
  }
  return m;
}

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "low") out.insert(out.end(), kLowSnrs.begin(), kLowSnrs.end());
    else if (tok == "med" || tok == "medium")
      out.insert(out.end(), kMediumSnrs.begin(), kMediumSnrs.end());
    else if (tok == "high") out.insert(out.end(), kHighSnrs.begin(), kHighSnrs.end());
    else throw std::invalid_argument("unknown SNR level '" + tok + "' (want low,med,high)");
  }
  require(!out.empty(), "parse_levels: empty level list");
  return out;
}

std::string level_of(double snr_db) {
  auto in = [&](const std::vector<double>& v) {
    for (double s : v)
      if (s == snr_db) return true;
    return false;
  };
  if (in(kLowSnrs)) return "low";
  if (in(kMediumSnrs)) return "medium";
  if (in(kHighSnrs)) return "high";
  return "unassigned";
}

LabeledUtterance synth_utterance(uint64_t seed, long index, double snr_db,
                                 const FrameSpec& spec) {
  std::seed_seq ss{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                   static_cast<uint32_t>(index), 0x56414453u};
  std::mt19937_64 rng(ss);

  const long n = static_cast<long>(std::lround(urange(rng, 2.0, 4.0) * kFs));
  std::vector<double> clean(n, 0.0);
  std::vector<std::pair<long, long>> spans;
  long pos = 0;
  while (true) {
    pos += static_cast<long>(urange(rng, 0.15, 0.50) * kFs);  // leading silence
    if (pos >= n) break;
    long v_end = pos + static_cast<long>(urange(rng, 0.30, 0.90) * kFs);
    v_end = std::min(v_end, n);
    if (v_end - pos >= static_cast<long>(0.05 * kFs)) {
      add_voiced_segment(rng, clean, pos, v_end, urange(rng, 0.25, 0.50));
      spans.emplace_back(pos, v_end);
    }
    pos = v_end;
  }
  // A pathological draw could leave no voiced span; force one mid-utterance.
  if (spans.empty()) {
    const long s0 = n / 4, s1 = std::min(n, s0 + static_cast<long>(0.5 * kFs));
    add_voiced_segment(rng, clean, s0, s1, 0.4);
    spans.emplace_back(s0, s1);
  }

  std::string kind;
  std::vector<double> noise = make_noise(rng, n, &kind);

  // Pre-scale both sides so the mix cannot clip; a joint scale preserves the
  // commanded SNR exactly.
  double sq_c = 0.0, sq_n = 0.0;
  for (long i = 0; i < n; ++i) {
    sq_c += clean[i] * clean[i];
    sq_n += noise[i] * noise[i];
  }
  const double g = std::sqrt(sq_c / sq_n) / std::pow(10.0, snr_db / 20.0);
  const double worst = peak(clean) + g * peak(noise);
  const double scale = worst > 0.99 ? 0.99 / worst : 1.0;

  LabeledUtterance u;
  u.snr_db = snr_db;
  u.noise_kind = kind;
  u.mask = spans;
  u.clean.resize(n);
  std::vector<float> noise_f(n);
  for (long i = 0; i < n; ++i) {
    u.clean[i] = static_cast<float>(clean[i] * scale);
    noise_f[i] = static_cast<float>(noise[i] * scale);
  }
  u.noisy = mix_at_snr(u.clean, noise_f, snr_db);
  u.labels = make_labels(mask_to_samples(spans, n), spec);
  return u;
}

std::vector<LabeledUtterance> synth_corpus(int n_utts,
                                           const std::vector<double>& snr_levels,
                                           uint64_t seed, const FrameSpec& spec) {
  require(n_utts >= 1, "synth_corpus: n_utts must be >= 1");
  require(!snr_levels.empty(), "synth_corpus: no SNR levels");
  std::vector<LabeledUtterance> out;
  out.reserve(n_utts);
  for (int i = 0; i < n_utts; ++i)
    out.push_back(synth_utterance(seed, i, snr_levels[i % snr_levels.size()], spec));
  return out;
}

void write_mask_file(const std::string& path,
                     const std::vector<std::pair<long, long>>& spans) {
  std::string body;
  for (const auto& [s0, s1] : spans) body += std::to_string(s0) + " " + std::to_string(s1) + "\n";
  write_text_atomic(path, body);
}

std::vector<std::pair<long, long>> read_mask_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open mask file: " + path);
  std::vector<std::pair<long, long>> spans;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long s0, s1;
    if (!(ls >> s0 >> s1)) throw std::runtime_error("bad mask line in " + path + ": " + line);
    spans.emplace_back(s0, s1);
  }
  return spans;
}

namespace {
std::string utt_base(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt_%05d", i);
  return buf;
}
}  // namespace

void save_corpus(const std::string& dir, const std::vector<LabeledUtterance>& utts) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  for (size_t i = 0; i < utts.size(); ++i) {
    const std::string base = utt_base(static_cast<int>(i));
    const std::string noisy = base + "_noisy.wav";
    const std::string clean = base + "_clean.wav";
    const std::string mask = base + "_mask.txt";
    write_wav(dir + "/" + noisy, utts[i].noisy);
    write_wav(dir + "/" + clean, utts[i].clean);
    write_mask_file(dir + "/" + mask, utts[i].mask);
    char snr[32];
    std::snprintf(snr, sizeof snr, "%g", utts[i].snr_db);
    manifest += noisy + " " + clean + " " + mask + " " + snr + " " + utts[i].noise_kind + "\n";
  }
  write_text_atomic(dir + "/manifest.txt", manifest);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    if (!(ls >> e.noisy >> e.clean >> e.mask >> e.snr_db >> e.noise_kind))
      throw std::runtime_error("bad manifest line: " + line);
    out.push_back(std::move(e));
  }
  require(!out.empty(), "manifest is empty: " + path);
  return out;
}

LabeledUtterance load_utterance(const std::string& dir, const ManifestEntry& e,
                                const FrameSpec& spec) {
  LabeledUtterance u;
  u.noisy = read_wav(dir + "/" + e.noisy).samples;
  u.clean = read_wav(dir + "/" + e.clean).samples;
  require(u.noisy.size() == u.clean.size(), "noisy/clean length mismatch: " + e.noisy);
  u.mask = read_mask_file(dir + "/" + e.mask);
  u.snr_db = e.snr_db;
  u.noise_kind = e.noise_kind;
  u.labels = make_labels(mask_to_samples(u.mask, static_cast<long>(u.noisy.size())), spec);
  return u;
}

std::vector<LabeledUtterance> load_corpus(const std::string& dir, const FrameSpec& spec) {
  std::vector<LabeledUtterance> out;
  for (const auto& e : read_manifest(dir + "/manifest.txt"))
    out.push_back(load_utterance(dir, e, spec));
  return out;
}

}  // namespace svad
