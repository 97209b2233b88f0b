// frames.hpp — turns the filterbank response into the per-frame feature
// matrix fed to the spiking stack: full-wave rectify, average over a sliding
// window, compress with log1p, then scale the whole utterance by its single
// largest value so every feature lands in [0, 1].
//
// The backward pass is exact, including the quotient rule through the max:
// the winning entry collects an extra -sum(g * z) / m^2 term. An all-silent
// utterance (max == 0) maps to all-zero features with zero gradient.
#pragma once

#include <cmath>
#include <vector>

#include "svad/tensor.hpp"

namespace svad {

struct FrameSpec {
  int win = 480;  // samples per frame
  int hop = 240;  // frame step

  void validate() const {
    require(win >= 1 && hop >= 1, "FrameSpec: win and hop must be positive");
    require(hop <= win, "FrameSpec: hop must not exceed win");
  }
};

inline int frame_count(int n_samples, const FrameSpec& spec) {
  spec.validate();
  require(n_samples >= spec.win, "frame_count: signal shorter than one frame");
  return (n_samples - spec.win) / spec.hop + 1;
}

template <typename S>
struct FrameTape {
  Mat<signed char> sign;  // (C, n) sign of the filtered signal, 0 at 0
  Mat<S> fbar;            // (T, C) rectified frame means
  Mat<S> z;               // (T, C) log1p(fbar)
  S maxval = S(0);
  int arg_t = 0, arg_c = 0;
};

template <typename S>
inline Mat<S> extract_frames_recorded(const Mat<S>& filtered, const FrameSpec& spec,
                                      FrameTape<S>* tape) {
  spec.validate();
  const int C = filtered.rows;
  const int n = filtered.cols;
  require(C >= 1, "extract_frames: no channels");
  const int T = frame_count(n, spec);

  Mat<signed char> sign(C, n);
  for (int c = 0; c < C; ++c) {
    const S* x = filtered.row(c);
    signed char* sg = sign.row(c);
    for (int s = 0; s < n; ++s) sg[s] = x[s] > S(0) ? 1 : (x[s] < S(0) ? -1 : 0);
  }

  Mat<S> fbar(T, C), z(T, C);
  const S inv_win = S(1) / S(spec.win);
  for (int t = 0; t < T; ++t) {
    const int s0 = t * spec.hop;
    for (int c = 0; c < C; ++c) {
      const S* x = filtered.row(c) + s0;
      S acc = S(0);
      for (int s = 0; s < spec.win; ++s) acc += std::abs(x[s]);
      fbar.at(t, c) = acc * inv_win;
      z.at(t, c) = std::log1p(fbar.at(t, c));
    }
  }

  S m = S(0);
  int at = 0, ac = 0;
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c)
      if (z.at(t, c) > m) {
        m = z.at(t, c);
        at = t;
        ac = c;
      }

  Mat<S> out(T, C);
  if (m > S(0)) {
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) out.at(t, c) = z.at(t, c) / m;
  }
  if (tape) {
    tape->sign = std::move(sign);
    tape->fbar = std::move(fbar);
    tape->z = std::move(z);
    tape->maxval = m;
    tape->arg_t = at;
    tape->arg_c = ac;
  }
  return out;
}

template <typename S>
inline Mat<S> extract_frames(const Mat<S>& filtered, const FrameSpec& spec) {
  return extract_frames_recorded<S>(filtered, spec, nullptr);
}

template <typename S>
inline Mat<S> frames_backward(const FrameTape<S>& tape, const FrameSpec& spec,
                              const Mat<S>& g_out) {
  spec.validate();
  const int T = tape.z.rows;
  const int C = tape.z.cols;
  const int n = tape.sign.cols;
  require(g_out.rows == T && g_out.cols == C, "frames_backward: gradient shape mismatch");
  require_eq(tape.sign.rows, C, "frames_backward: tape channel mismatch");

  Mat<S> g_filtered(C, n);
  if (tape.maxval <= S(0)) return g_filtered;

  const S m = tape.maxval;
  S dot = S(0);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) dot += g_out.at(t, c) * tape.z.at(t, c);

  const S inv_win = S(1) / S(spec.win);
  for (int t = 0; t < T; ++t) {
    const int s0 = t * spec.hop;
    for (int c = 0; c < C; ++c) {
      S gz = g_out.at(t, c) / m;
      if (t == tape.arg_t && c == tape.arg_c) gz -= dot / (m * m);
      const S gf = gz / (S(1) + tape.fbar.at(t, c)) * inv_win;
      const signed char* sg = tape.sign.row(c) + s0;
      S* gx = g_filtered.row(c) + s0;
      for (int s = 0; s < spec.win; ++s) gx[s] += gf * S(sg[s]);
    }
  }
  return g_filtered;
}

}  // namespace svad
