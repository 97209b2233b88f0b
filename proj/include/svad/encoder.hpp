// encoder.hpp — the spiking feature encoder: a temporal convolution that
// turns frame features into a spike code, a small stack of fully connected
// spiking layers that produces a per-feature attention mask from the same
// features, and the elementwise gate that combines the two. Either half can
// be absent: without the convolution the mask gates the analog features
// directly, and without the mask the encoder output passes through untouched.
#pragma once

#include <vector>

#include "svad/layers.hpp"
#include "svad/tensor.hpp"

namespace svad {

template <typename S>
struct EncoderParams {
  bool use_sconv = true;
  Layer<S> sconv;               // Conv1D over frames, ignored if !use_sconv
  std::vector<Layer<S>> attn;   // dense spiking layers; empty disables gating

  void validate(int n_feat) const {
    if (use_sconv) {
      require(sconv.kind == LayerKind::Conv1D, "EncoderParams: sconv must be Conv1D");
      require_eq(sconv.n_in, n_feat, "EncoderParams: sconv input width");
      require_eq(sconv.n_out, n_feat, "EncoderParams: sconv output width");
    }
    int w = n_feat;
    for (const auto& L : attn) {
      require(L.kind == LayerKind::Dense, "EncoderParams: attention layers are dense");
      require_eq(L.n_in, w, "EncoderParams: attention widths must chain");
      w = L.n_out;
    }
    if (!attn.empty())
      require_eq(w, n_feat, "EncoderParams: mask width must match features");
  }
};

template <typename S>
inline Mat<S> apply_attention(const Mat<S>& y, const Mat<S>& mask) {
  require(y.same_shape(mask), "apply_attention: shape mismatch");
  Mat<S> out(y.rows, y.cols);
  for (size_t i = 0; i < y.v.size(); ++i) out.v[i] = y.v[i] * mask.v[i];
  return out;
}

template <typename S>
struct EncoderTape {
  Mat<S> input;                              // frame features
  LayerActivations<S> sconv;                 // empty if conv disabled
  std::vector<LayerActivations<S>> attn;
  Mat<S> y;     // pre-gate code (conv spikes, or the features themselves)
  Mat<S> mask;  // empty if no attention layers
};

// Returns the gated code fed to the classifier. The mask path always starts
// from the raw features, not from the convolution output.
template <typename S>
inline Mat<S> encoder_forward(const EncoderParams<S>& enc, const Mat<S>& features,
                              const LifParams& p, Activation mode = Activation::Spiking,
                              EncoderTape<S>* tape = nullptr) {
  enc.validate(features.cols);
  require(features.rows >= 1, "encoder_forward: empty features");
  EncoderTape<S> local;
  EncoderTape<S>& tp = tape ? *tape : local;
  tp.input = features;
  tp.attn.clear();

  if (enc.use_sconv) {
    tp.sconv = layer_forward(enc.sconv, features, p, mode);
    tp.y = tp.sconv.o;
  } else {
    tp.sconv = LayerActivations<S>{};
    tp.y = features;
  }

  if (enc.attn.empty()) {
    tp.mask = Mat<S>();
    return tp.y;
  }
  const Mat<S>* x = &features;
  for (const auto& L : enc.attn) {
    tp.attn.push_back(layer_forward(L, *x, p, mode));
    x = &tp.attn.back().o;
  }
  tp.mask = *x;
  return apply_attention(tp.y, tp.mask);
}

template <typename S>
struct EncoderGrads {
  LayerGrads<S> sconv;
  std::vector<LayerGrads<S>> attn;
  Mat<S> g_features;
};

template <typename S>
inline EncoderGrads<S> encoder_backward(const EncoderParams<S>& enc,
                                        const EncoderTape<S>& tape, const Mat<S>& g_out,
                                        const LifParams& p) {
  enc.validate(tape.input.cols);
  EncoderGrads<S> g;
  g.g_features = Mat<S>(tape.input.rows, tape.input.cols);

  Mat<S> g_y;
  if (enc.attn.empty()) {
    g_y = g_out;
  } else {
    // Gate: d(y*m)/dy = m, d(y*m)/dm = y.
    g_y = apply_attention(g_out, tape.mask);
    Mat<S> g_mask = apply_attention(g_out, tape.y);
    for (size_t l = enc.attn.size(); l-- > 0;) {
      const Mat<S>& in = l == 0 ? tape.input : tape.attn[l - 1].o;
      g.attn.insert(g.attn.begin(),
                    layer_backward(enc.attn[l], in, tape.attn[l], g_mask, p));
      g_mask = g.attn.front().g_input;
      g.attn.front().g_input = Mat<S>();
    }
    for (size_t i = 0; i < g.g_features.v.size(); ++i)
      g.g_features.v[i] += g_mask.v[i];
  }

  if (enc.use_sconv) {
    g.sconv = layer_backward(enc.sconv, tape.input, tape.sconv, g_y, p);
    for (size_t i = 0; i < g.g_features.v.size(); ++i)
      g.g_features.v[i] += g.sconv.g_input.v[i];
    g.sconv.g_input = Mat<S>();
  } else {
    for (size_t i = 0; i < g.g_features.v.size(); ++i)
      g.g_features.v[i] += g_y.v[i];
  }
  return g;
}

}  // namespace svad
