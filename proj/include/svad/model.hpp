// model.hpp — end-to-end network assembly: learnable filterbank front end,
// frame feature extraction, spiking encoder with attention gating, recurrent
// spiking classifier, leaky readout. Provides the recorded forward pass, the
// full reverse pass onto every parameter array, parameter initialization,
// and the per-run operation trace used for energy estimates.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "svad/classifier.hpp"
#include "svad/encoder.hpp"
#include "svad/frames.hpp"
#include "svad/layers.hpp"
#include "svad/lif.hpp"
#include "svad/losses.hpp"
#include "svad/sinc.hpp"
#include "svad/tensor.hpp"
#include "svad/trace.hpp"

namespace svad {

struct ArchDescriptor {
  std::string variant = "svad";  // "svad" or "svad-s"
  int n_filters = 20;            // filterbank size == frame feature width
  int kernel_len = 101;          // filterbank FIR taps
  int conv_kernel = 3;           // encoder conv taps along frames
  bool use_sconv = true;
  int attn_layers = 3;           // 0 disables the gate entirely
  int n_hidden = 32;
  int n_classes = 2;
  double fs = 16000.0;
  FrameSpec frames;
  LifParams lif;

  void validate() const {
    require(variant == "svad" || variant == "svad-s", "Arch: unknown variant");
    require(n_filters >= 1, "Arch: n_filters");
    require(kernel_len >= 3 && kernel_len % 2 == 1, "Arch: kernel_len must be odd");
    require(conv_kernel >= 1 && conv_kernel % 2 == 1, "Arch: conv_kernel must be odd");
    require(attn_layers >= 0, "Arch: attn_layers");
    require(n_hidden >= 1 && n_classes >= 2, "Arch: classifier shape");
    require(fs > 0.0, "Arch: fs");
    frames.validate();
    lif.validate();
  }
};

// "none" keeps the architecture as configured; "no_sconv" removes the
// encoder convolution (the mask gates the analog features); and
// "no_sconv_no_attn" feeds the features straight into the classifier.
inline ArchDescriptor make_arch(const std::string& variant,
                                const std::string& ablation = "none") {
  ArchDescriptor a;
  a.variant = variant;
  if (variant == "svad") {
    a.attn_layers = 3;
    a.n_hidden = 32;
  } else if (variant == "svad-s") {
    a.attn_layers = 2;
    a.n_hidden = 10;
  } else {
    require(false, "make_arch: unknown variant '" + variant + "'");
  }
  if (ablation == "none") {
  } else if (ablation == "no_sconv") {
    a.use_sconv = false;
  } else if (ablation == "no_sconv_no_attn") {
    a.use_sconv = false;
    a.attn_layers = 0;
  } else {
    require(false, "make_arch: unknown ablation '" + ablation + "'");
  }
  a.validate();
  return a;
}

inline long param_count(const ArchDescriptor& a) {
  const long c = a.n_filters;
  long n = 2 * c;  // filterbank cutoffs
  if (a.use_sconv) n += c * c * a.conv_kernel + c;
  n += static_cast<long>(a.attn_layers) * (c * c + c);
  n += c * a.n_hidden + static_cast<long>(a.n_hidden) * a.n_hidden + a.n_hidden;
  n += static_cast<long>(a.n_hidden) * a.n_classes + a.n_classes;
  return n;
}

template <typename S>
struct ModelParams {
  ArchDescriptor arch;
  SincBank bank;
  EncoderParams<S> enc;
  Layer<S> hidden;
  Mat<S> w_out;
  std::vector<S> b_out;
};

template <typename S>
struct ModelGrads {
  std::vector<double> g_f1, g_band;
  LayerGrads<S> sconv;
  std::vector<LayerGrads<S>> attn;
  LayerGrads<S> hidden;
  Mat<S> g_w_out;
  std::vector<S> g_b_out;
};

// Every parameter array in a fixed order; fn is a generic callable invoked
// as fn(name, ptr, len) with double* for the filterbank cutoffs and S* for
// everything else. Checkpoints, the optimizer, and the finite-difference
// harness all iterate through here, so the order is part of the file format.
template <typename S, typename Fn>
inline void visit_arrays(ModelParams<S>& m, Fn&& fn) {
  fn("sinc.f1", m.bank.f1_norm.data(), m.bank.f1_norm.size());
  fn("sinc.band", m.bank.band_norm.data(), m.bank.band_norm.size());
  if (m.arch.use_sconv) {
    fn("sconv.w", m.enc.sconv.weights.w.v.data(), m.enc.sconv.weights.w.v.size());
    fn("sconv.b", m.enc.sconv.weights.b.data(), m.enc.sconv.weights.b.size());
  }
  for (size_t i = 0; i < m.enc.attn.size(); ++i) {
    const std::string base = "attn" + std::to_string(i);
    fn((base + ".w").c_str(), m.enc.attn[i].weights.w.v.data(),
       m.enc.attn[i].weights.w.v.size());
    fn((base + ".b").c_str(), m.enc.attn[i].weights.b.data(),
       m.enc.attn[i].weights.b.size());
  }
  fn("hidden.w", m.hidden.weights.w.v.data(), m.hidden.weights.w.v.size());
  fn("hidden.b", m.hidden.weights.b.data(), m.hidden.weights.b.size());
  fn("hidden.w_rec", m.hidden.weights.w_rec.v.data(), m.hidden.weights.w_rec.v.size());
  fn("readout.w", m.w_out.v.data(), m.w_out.v.size());
  fn("readout.b", m.b_out.data(), m.b_out.size());
}

// Gradient arrays in the same order as visit_arrays on the parameters.
template <typename S, typename Fn>
inline void visit_grad_arrays(const ArchDescriptor& arch, ModelGrads<S>& g, Fn&& fn) {
  fn("sinc.f1", g.g_f1.data(), g.g_f1.size());
  fn("sinc.band", g.g_band.data(), g.g_band.size());
  if (arch.use_sconv) {
    fn("sconv.w", g.sconv.g_w.v.data(), g.sconv.g_w.v.size());
    fn("sconv.b", g.sconv.g_b.data(), g.sconv.g_b.size());
  }
  for (size_t i = 0; i < g.attn.size(); ++i) {
    const std::string base = "attn" + std::to_string(i);
    fn((base + ".w").c_str(), g.attn[i].g_w.v.data(), g.attn[i].g_w.v.size());
    fn((base + ".b").c_str(), g.attn[i].g_b.data(), g.attn[i].g_b.size());
  }
  fn("hidden.w", g.hidden.g_w.v.data(), g.hidden.g_w.v.size());
  fn("hidden.b", g.hidden.g_b.data(), g.hidden.g_b.size());
  fn("hidden.w_rec", g.hidden.g_wrec.v.data(), g.hidden.g_wrec.v.size());
  fn("readout.w", g.g_w_out.v.data(), g.g_w_out.v.size());
  fn("readout.b", g.g_b_out.data(), g.g_b_out.size());
}

template <typename S>
inline long param_count(ModelParams<S>& m) {
  long n = 0;
  visit_arrays(m, [&](const char*, auto*, size_t len) { n += static_cast<long>(len); });
  return n;
}

namespace detail {

template <typename S>
inline void fill_uniform(std::mt19937_64& rng, S* p, size_t n, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (size_t i = 0; i < n; ++i) p[i] = static_cast<S>(dist(rng));
}

template <typename S>
inline Layer<S> make_layer(std::mt19937_64& rng, LayerKind kind, const std::string& name,
                           int n_in, int n_out, int kernel) {
  Layer<S> L;
  L.kind = kind;
  L.name = name;
  L.n_in = n_in;
  L.n_out = n_out;
  L.kernel = kernel;
  L.weights.w = Mat<S>(n_out, n_in * kernel);
  L.weights.b.assign(n_out, S(0));
  const double fan_in = static_cast<double>(n_in) * kernel;
  fill_uniform(rng, L.weights.w.v.data(), L.weights.w.v.size(),
               std::sqrt(1.0 / fan_in));
  if (kind == LayerKind::Recurrent) {
    L.weights.w_rec = Mat<S>(n_out, n_out);
    fill_uniform(rng, L.weights.w_rec.v.data(), L.weights.w_rec.v.size(),
                 std::sqrt(1.0 / n_out));
  }
  return L;
}

}  // namespace detail

// Weights drawn uniformly in +-sqrt(1/fan_in), biases zero, filterbank
// cutoffs mel spaced. Arrays are drawn in visitation order.
template <typename S>
inline ModelParams<S> init_params(const ArchDescriptor& arch, unsigned long long seed) {
  arch.validate();
  ModelParams<S> m;
  m.arch = arch;
  m.bank.n_filters = arch.n_filters;
  m.bank.kernel_len = arch.kernel_len;
  m.bank.fs = arch.fs;
  init_mel_cutoffs(m.bank);

  std::mt19937_64 rng(seed);
  const int c = arch.n_filters;
  m.enc.use_sconv = arch.use_sconv;
  if (arch.use_sconv)
    m.enc.sconv = detail::make_layer<S>(rng, LayerKind::Conv1D, "sconv", c, c,
                                        arch.conv_kernel);
  for (int i = 0; i < arch.attn_layers; ++i)
    m.enc.attn.push_back(detail::make_layer<S>(
        rng, LayerKind::Dense, "attn" + std::to_string(i), c, c, 1));
  m.hidden = detail::make_layer<S>(rng, LayerKind::Recurrent, "hidden", c,
                                   arch.n_hidden, 1);
  m.w_out = Mat<S>(arch.n_classes, arch.n_hidden);
  detail::fill_uniform(rng, m.w_out.v.data(), m.w_out.v.size(),
                       std::sqrt(1.0 / arch.n_hidden));
  m.b_out.assign(arch.n_classes, S(0));
  return m;
}

template <typename S>
inline ModelGrads<S> make_grads(const ModelParams<S>& m) {
  ModelGrads<S> g;
  g.g_f1.assign(m.bank.f1_norm.size(), 0.0);
  g.g_band.assign(m.bank.band_norm.size(), 0.0);
  auto zero_like = [](const Layer<S>& L) {
    LayerGrads<S> lg;
    lg.g_w = Mat<S>(L.weights.w.rows, L.weights.w.cols);
    lg.g_b.assign(L.weights.b.size(), S(0));
    if (L.weights.has_rec()) lg.g_wrec = Mat<S>(L.weights.w_rec.rows, L.weights.w_rec.cols);
    return lg;
  };
  if (m.arch.use_sconv) g.sconv = zero_like(m.enc.sconv);
  for (const auto& L : m.enc.attn) g.attn.push_back(zero_like(L));
  g.hidden = zero_like(m.hidden);
  g.g_w_out = Mat<S>(m.w_out.rows, m.w_out.cols);
  g.g_b_out.assign(m.b_out.size(), S(0));
  return g;
}

// acc += g, array by array.
template <typename S>
inline void grads_accumulate(const ArchDescriptor& arch, ModelGrads<S>& acc,
                             ModelGrads<S>& g) {
  std::vector<std::pair<void*, size_t>> lhs;
  visit_grad_arrays(arch, acc, [&](const char*, auto* p, size_t n) {
    lhs.emplace_back(static_cast<void*>(p), n);
  });
  size_t idx = 0;
  visit_grad_arrays(arch, g, [&](const char*, auto* p, size_t n) {
    require(idx < lhs.size() && lhs[idx].second == n, "grads_accumulate: shape drift");
    auto* dst = static_cast<decltype(p)>(lhs[idx].first);
    for (size_t i = 0; i < n; ++i) dst[i] += p[i];
    ++idx;
  });
}

template <typename S>
struct ModelTape {
  std::vector<S> wave;
  FrameTape<S> frames;
  Mat<S> features;
  EncoderTape<S> enc;
  Mat<S> shat;
  LayerActivations<S> hidden;
  Mat<S> v;
  Activation mode = Activation::Spiking;
};

template <typename S>
struct ForwardOut {
  Mat<S> v;      // readout potentials, (T, n_classes)
  Mat<S> probs;  // softmax rows
  Mat<S> shat;   // gated encoder output fed to the classifier
  RunTrace trace;
};

namespace detail {

// Nominal multiply-accumulate work done outside the spiking fabric: the FIR
// front end, feature shaping, and every current that is driven by analog
// values rather than spikes. Counted per forward pass.
template <typename S>
inline long analog_macs(const ArchDescriptor& a, int n_samples, int T) {
  const long c = a.n_filters;
  long macs = c * static_cast<long>(a.kernel_len) * n_samples;  // filterbank FIR
  macs += c * static_cast<long>(n_samples);                     // rectify + window sums
  macs += 2L * T * c;                                           // log1p + rescale
  if (a.use_sconv) {
    macs += static_cast<long>(T) * a.conv_kernel * c * c;  // conv current from features
  }
  if (a.attn_layers > 0) {
    macs += static_cast<long>(T) * c * c;  // first mask layer current from features
    if (!a.use_sconv) {
      macs += static_cast<long>(T) * c;               // analog gate products
      macs += static_cast<long>(T) * c * a.n_hidden;  // classifier current from gated features
    }
  } else if (!a.use_sconv) {
    macs += static_cast<long>(T) * c * a.n_hidden;  // classifier current from features
  }
  return macs;
}

}  // namespace detail

// Trace layout: one entry per spiking layer plus pseudo entries for the gate,
// and one for the stateful but non-spiking readout. fan_out of an entry prices
// the synapses one of its events drives downstream. In the gated spiking path
// the code and mask layers terminate in the product (fan_out 0); the product
// itself costs one op per surviving event ("gate") and each surviving event
// then drives the classifier synapses ("attended"). When the gate multiplies
// analog features instead of spikes, that work sits in dsp_macs.
template <typename S>
inline RunTrace build_trace(const ModelParams<S>& m, const ModelTape<S>& tape) {
  const ArchDescriptor& a = m.arch;
  const int T = tape.features.rows;
  RunTrace tr;
  tr.timesteps = T;
  tr.duration_s = static_cast<double>(tape.wave.size()) / a.fs;
  tr.dsp_macs = detail::analog_macs<S>(a, static_cast<int>(tape.wave.size()), T);
  const bool gated = a.attn_layers > 0;
  if (a.use_sconv)
    tr.layers.push_back({"sconv", a.n_filters, popcount(tape.enc.y),
                         gated ? 0 : a.n_hidden, true});
  for (size_t i = 0; i < tape.enc.attn.size(); ++i) {
    const bool last = i + 1 == tape.enc.attn.size();
    tr.layers.push_back({"attn" + std::to_string(i), m.enc.attn[i].n_out,
                         popcount(tape.enc.attn[i].o),
                         last ? 0 : m.enc.attn[i + 1].n_out, true});
  }
  if (gated && a.use_sconv) {
    const long surviving = popcount(tape.shat);
    tr.layers.push_back({"gate", a.n_filters, surviving, 1, false});
    tr.layers.push_back({"attended", a.n_filters, surviving, a.n_hidden, false});
  }
  tr.layers.push_back({"hidden", a.n_hidden, popcount(tape.hidden.o),
                       a.n_hidden + a.n_classes, true});
  tr.layers.push_back({"readout", a.n_classes, 0, 0, true});
  tr.validate();
  return tr;
}

template <typename S>
inline ForwardOut<S> model_forward(const ModelParams<S>& m, const std::vector<S>& wave,
                                   Activation mode = Activation::Spiking,
                                   ModelTape<S>* tape = nullptr) {
  m.arch.validate();
  ModelTape<S> local;
  ModelTape<S>& tp = tape ? *tape : local;
  tp.mode = mode;
  tp.wave = wave;
  const Mat<S> kernels = sinc_kernels<S>(m.bank);
  const Mat<S> filtered = filterbank_forward(kernels, wave);
  tp.features = extract_frames_recorded(filtered, m.arch.frames, &tp.frames);
  tp.shat = encoder_forward(m.enc, tp.features, m.arch.lif, mode, &tp.enc);
  tp.hidden = layer_forward(m.hidden, tp.shat, m.arch.lif, mode);
  tp.v = readout_forward(m.w_out, m.b_out, m.arch.lif.alpha, tp.hidden.o);

  ForwardOut<S> out;
  out.v = tp.v;
  out.probs = softmax_rows(tp.v);
  out.shat = tp.shat;
  out.trace = build_trace(m, tp);
  return out;
}

// The gate's training target: the pre-gate encoder code of the clean signal
// under the current parameters. Callers treat it as a constant.
template <typename S>
inline Mat<S> encoder_clean_target(const ModelParams<S>& m, const std::vector<S>& clean,
                                   Activation mode = Activation::Spiking) {
  const Mat<S> kernels = sinc_kernels<S>(m.bank);
  const Mat<S> filtered = filterbank_forward(kernels, clean);
  const Mat<S> feats = extract_frames(filtered, m.arch.frames);
  if (!m.arch.use_sconv) return feats;
  return layer_forward(m.enc.sconv, feats, m.arch.lif, mode).o;
}

// Reverse pass from readout potentials (g_v) and, when the gate is active,
// an external gradient on the gated code (g_shat, may be empty). Returns
// fresh gradients; use grads_accumulate to fold into a batch accumulator.
template <typename S>
inline ModelGrads<S> model_backward(const ModelParams<S>& m, const ModelTape<S>& tape,
                                    const Mat<S>& g_v, const Mat<S>& g_shat_ext) {
  ModelGrads<S> g = make_grads(m);
  ReadoutGrads<S> ro = readout_backward(m.w_out, m.arch.lif.alpha, tape.hidden.o, g_v);
  g.g_w_out = std::move(ro.g_w);
  g.g_b_out = std::move(ro.g_b);

  LayerGrads<S> hid = layer_backward(m.hidden, tape.shat, tape.hidden, ro.g_h, m.arch.lif);
  Mat<S> g_shat = std::move(hid.g_input);
  hid.g_input = Mat<S>();
  g.hidden = std::move(hid);
  if (g_shat_ext.rows > 0) {
    require(g_shat.same_shape(g_shat_ext), "model_backward: g_shat shape mismatch");
    for (size_t i = 0; i < g_shat.v.size(); ++i) g_shat.v[i] += g_shat_ext.v[i];
  }

  EncoderGrads<S> eg = encoder_backward(m.enc, tape.enc, g_shat, m.arch.lif);
  if (m.arch.use_sconv) g.sconv = std::move(eg.sconv);
  g.attn = std::move(eg.attn);

  const Mat<S> g_filtered = frames_backward(tape.frames, m.arch.frames, eg.g_features);
  const Mat<S> g_kernels =
      filterbank_backward_kernels(tape.wave, g_filtered, m.bank.kernel_len);
  SincGrads sg = sinc_kernels_backward(m.bank, g_kernels);
  g.g_f1 = std::move(sg.g_f1);
  g.g_band = std::move(sg.g_band);
  return g;
}

struct LossBreakdown {
  double ce_sum = 0.0;   // summed over frames
  double mse_sum = 0.0;  // summed over gate elements
  long frames = 0;
  long elems = 0;

  double mean_total(double lambda) const {
    double v = frames > 0 ? ce_sum / frames : 0.0;
    if (elems > 0) v += lambda * mse_sum / elems;
    return v;
  }
};

// Forward + loss on one utterance. clean_target may be empty (no gate or no
// regularizer); grads, when requested, are normalized by inv_ce_norm frames
// and inv_mse_norm elements so multi-utterance accumulation just sums.
template <typename S>
inline LossBreakdown model_loss(const ModelParams<S>& m, const std::vector<S>& wave,
                                const std::vector<int>& labels,
                                const Mat<S>& clean_target, double lambda,
                                Activation mode, ModelGrads<S>* grads_out,
                                double inv_ce_norm = 0.0, double inv_mse_norm = 0.0,
                                RunTrace* trace_out = nullptr) {
  ModelTape<S> tape;
  ForwardOut<S> fwd = model_forward(m, wave, mode, &tape);
  require_eq(static_cast<int>(labels.size()), fwd.v.rows,
             "model_loss: labels do not match frame count");
  const bool use_mse = clean_target.rows > 0 && m.arch.attn_layers > 0;
  if (use_mse)
    require(fwd.shat.same_shape(clean_target), "model_loss: clean target shape");

  LossBreakdown lb;
  lb.ce_sum = ce_loss_sum(fwd.probs, labels);
  lb.frames = fwd.v.rows;
  if (use_mse) {
    lb.mse_sum = mse_loss_sum(fwd.shat, clean_target);
    lb.elems = static_cast<long>(fwd.shat.v.size());
  }
  if (trace_out) *trace_out = fwd.trace;
  if (grads_out) {
    if (inv_ce_norm == 0.0) inv_ce_norm = 1.0 / lb.frames;
    if (inv_mse_norm == 0.0 && lb.elems > 0) inv_mse_norm = 1.0 / lb.elems;
    const Mat<S> g_v = ce_grad_v(fwd.probs, labels, inv_ce_norm);
    Mat<S> g_shat;
    if (use_mse) g_shat = mse_grad(fwd.shat, clean_target, lambda * inv_mse_norm);
    *grads_out = model_backward(m, tape, g_v, g_shat);
  }
  return lb;
}

}  // namespace svad
