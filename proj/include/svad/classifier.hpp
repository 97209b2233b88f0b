// classifier.hpp — the non-spiking readout that sits on top of the recurrent
// hidden layer: a pair of leaky integrators, one per class, whose potentials
// are compared through a softmax. The integrators share the hidden layer's
// decay constant but never threshold or reset.
#pragma once

#include <vector>

#include "svad/losses.hpp"
#include "svad/tensor.hpp"

namespace svad {

// v[t] = decay * v[t-1] + W h[t] + b, v[-1] = 0.
template <typename S>
inline Mat<S> readout_forward(const Mat<S>& w, const std::vector<S>& b, double decay,
                              const Mat<S>& h) {
  require_eq(w.cols, h.cols, "readout_forward: weight width != hidden width");
  require_eq(static_cast<int>(b.size()), w.rows, "readout_forward: bias size");
  const int T = h.rows;
  const int n_cls = w.rows;
  Mat<S> v(T, n_cls);
  std::vector<S> prev(n_cls, S(0));
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < n_cls; ++c) {
      const S* wr = w.row(c);
      const S* hr = h.row(t);
      S acc = S(0);
      for (int j = 0; j < w.cols; ++j) acc += wr[j] * hr[j];
      prev[c] = static_cast<S>(decay) * prev[c] + acc + b[c];
      v.at(t, c) = prev[c];
    }
  }
  return v;
}

template <typename S>
struct ReadoutGrads {
  Mat<S> g_w;
  std::vector<S> g_b;
  Mat<S> g_h;
};

// Reverse recursion: gv[t] = g_v[t] + decay * gv[t+1].
template <typename S>
inline ReadoutGrads<S> readout_backward(const Mat<S>& w, double decay, const Mat<S>& h,
                                        const Mat<S>& g_v) {
  require(g_v.rows == h.rows && g_v.cols == w.rows,
          "readout_backward: gradient shape mismatch");
  const int T = h.rows;
  const int n_cls = w.rows;
  ReadoutGrads<S> g;
  g.g_w = Mat<S>(w.rows, w.cols);
  g.g_b.assign(n_cls, S(0));
  g.g_h = Mat<S>(T, w.cols);
  std::vector<S> gv(n_cls, S(0));
  for (int t = T - 1; t >= 0; --t) {
    for (int c = 0; c < n_cls; ++c) {
      gv[c] = g_v.at(t, c) + (t == T - 1 ? S(0) : static_cast<S>(decay) * gv[c]);
      const S gc = gv[c];
      if (gc == S(0)) continue;
      g.g_b[c] += gc;
      S* gwr = g.g_w.row(c);
      const S* hr = h.row(t);
      const S* wr = w.row(c);
      S* ghr = g.g_h.row(t);
      for (int j = 0; j < w.cols; ++j) {
        gwr[j] += gc * hr[j];
        ghr[j] += wr[j] * gc;
      }
    }
  }
  return g;
}

// One row of the decision file: frame index, the time in milliseconds at
// which the frame ends, the speech probability, and the hard label.
struct FrameDecision {
  int frame_index = 0;
  double t_ms = 0.0;
  double p_speech = 0.0;
  int label = 0;
};

constexpr int kNonSpeech = 0;
constexpr int kSpeech = 1;

// Hard decisions from class probabilities. Speech wins only on a strict
// majority; an exact 0.5 tie stays non-speech.
template <typename S>
inline std::vector<FrameDecision> decide(const Mat<S>& probs, double frame_ms = 30.0,
                                         double hop_ms = 15.0) {
  require_eq(probs.cols, 2, "decide: expected two classes");
  std::vector<FrameDecision> out(probs.rows);
  for (int t = 0; t < probs.rows; ++t) {
    const double p = static_cast<double>(probs.at(t, kSpeech));
    out[t].frame_index = t;
    out[t].t_ms = frame_ms + hop_ms * t;
    out[t].p_speech = p;
    out[t].label = p > 0.5 ? kSpeech : kNonSpeech;
  }
  return out;
}

}  // namespace svad
