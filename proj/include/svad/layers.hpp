// layers.hpp — spiking layer primitives (fully connected, temporal 1D
// convolution, recurrent) stepped frame-by-frame with LIF dynamics, plus the
// reverse-mode pass through the unrolled time axis.
//
// Inter-layer connections are feedforward within a frame; the couplings that
// cross timesteps are all intra-layer (membrane decay, soft reset through
// o_prev, self-recurrence through w_rec). The backward pass therefore runs
// layer by layer from the top, each layer resolving its own time recursion:
//
//   go[t] = g_ext[t] + w_rec^T gu[t+1] - theta * gu[t+1]
//   gu[t] = go[t] * boxcar(u[t]) + alpha * gu[t+1]
//
// where gu is the loss gradient on the post-update membrane and g_ext the
// gradient arriving from downstream consumers of o[t].
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "svad/lif.hpp"
#include "svad/tensor.hpp"
#include "svad/trace.hpp"

namespace svad {

enum class LayerKind { Dense, Recurrent, Conv1D };

template <typename S>
struct LayerWeights {
  Mat<S> w;               // (n_out, n_in); conv: (out_ch, kernel * in_ch)
  std::vector<S> b;       // per-neuron bias current
  Mat<S> w_rec;           // (n_out, n_out) when recurrent, else empty

  bool has_rec() const { return w_rec.rows > 0; }

  void validate(int n_in, int n_out, int kernel = 1) const {
    require_eq(w.rows, n_out, "LayerWeights: w rows != n_out");
    require_eq(w.cols, n_in * kernel, "LayerWeights: w cols != n_in * kernel");
    require_eq(static_cast<int>(b.size()), n_out, "LayerWeights: bias size != n_out");
    if (has_rec()) {
      require_eq(w_rec.rows, n_out, "LayerWeights: w_rec rows != n_out");
      require_eq(w_rec.cols, n_out, "LayerWeights: w_rec must be square");
    }
  }
};

template <typename S>
struct Layer {
  LayerKind kind = LayerKind::Dense;
  std::string name;
  int n_in = 0;
  int n_out = 0;
  int kernel = 1;  // taps along the frame axis; odd; 1 unless Conv1D
  LayerWeights<S> weights;

  void validate() const {
    require(n_in >= 1 && n_out >= 1, "Layer: empty shape");
    if (kind == LayerKind::Conv1D) {
      require(kernel >= 1 && kernel % 2 == 1, "Layer: conv kernel must be odd");
    } else {
      require_eq(kernel, 1, "Layer: kernel only valid for Conv1D");
    }
    require(kind == LayerKind::Recurrent || !weights.has_rec(),
            "Layer: w_rec only valid for Recurrent");
    require(kind != LayerKind::Recurrent || weights.has_rec(),
            "Layer: Recurrent layer missing w_rec");
    weights.validate(n_in, n_out, kernel);
  }
};

// I_i = sum_j w_ij * in_j + [sum_j wrec_ij * own_prev_j] + b_i
// own_prev must be present exactly when w_rec is.
//
// All current accumulations in this header use an explicit fused
// multiply-add. That pins the rounding behavior independently of how the
// compiler contracts expressions, which is what lets the event-driven,
// unrolled, and compositional formulations reproduce each other bit for bit.
template <typename S>
inline std::vector<S> layer_current(const LayerWeights<S>& wt,
                                    const std::vector<S>& in_spikes,
                                    const std::vector<S>* own_prev = nullptr) {
  const int n_out = wt.w.rows;
  const int n_in = wt.w.cols;
  require_eq(static_cast<int>(in_spikes.size()), n_in,
             "layer_current: input length != n_in");
  require(wt.has_rec() == (own_prev != nullptr),
          "layer_current: own_prev_spikes must be present iff w_rec is");
  if (own_prev)
    require_eq(static_cast<int>(own_prev->size()), n_out,
               "layer_current: own_prev length != n_out");
  std::vector<S> out(wt.b.begin(), wt.b.end());
  for (int i = 0; i < n_out; ++i) {
    const S* wi = wt.w.row(i);
    S acc = S(0);
    for (int j = 0; j < n_in; ++j) acc = std::fma(wi[j], in_spikes[j], acc);
    if (own_prev) {
      const S* ri = wt.w_rec.row(i);
      for (int j = 0; j < n_out; ++j) acc = std::fma(ri[j], (*own_prev)[j], acc);
    }
    out[i] += acc;
  }
  return out;
}

// Event-driven formulation: accumulate only the columns where the input is
// nonzero. Matches the dense product bit for bit: a skipped term contributes
// fma(w, 0, acc) == acc in the dense loop.
template <typename S>
inline std::vector<S> layer_current_sparse(const LayerWeights<S>& wt,
                                           const std::vector<S>& in_spikes,
                                           const std::vector<S>* own_prev = nullptr) {
  const int n_out = wt.w.rows;
  const int n_in = wt.w.cols;
  require_eq(static_cast<int>(in_spikes.size()), n_in,
             "layer_current: input length != n_in");
  std::vector<S> out(wt.b.begin(), wt.b.end());
  for (int i = 0; i < n_out; ++i) {
    const S* wi = wt.w.row(i);
    S acc = S(0);
    for (int j = 0; j < n_in; ++j)
      if (in_spikes[j] != S(0)) acc = std::fma(wi[j], in_spikes[j], acc);
    if (own_prev) {
      const S* ri = wt.w_rec.row(i);
      for (int j = 0; j < n_out; ++j)
        if ((*own_prev)[j] != S(0)) acc = std::fma(ri[j], (*own_prev)[j], acc);
    }
    out[i] += acc;
  }
  return out;
}

template <typename S>
struct LayerActivations {
  Mat<S> u;  // (T, n_out) post-update membrane potentials
  Mat<S> o;  // (T, n_out) outputs
};

namespace detail {

// Current for frame t of a conv layer, same zero padding along frames.
// Summation order is dt-major then channel so an unrolled banded-matrix
// product accumulating columns in ascending input order reproduces the
// exact floating-point sums.
template <typename S>
inline void conv_current(const Layer<S>& L, const Mat<S>& x, int t, S* out) {
  const int off = L.kernel / 2;
  for (int oc = 0; oc < L.n_out; ++oc) {
    const S* wr = L.weights.w.row(oc);
    S acc = S(0);
    for (int dt = 0; dt < L.kernel; ++dt) {
      const int tp = t + dt - off;
      if (tp < 0 || tp >= x.rows) continue;
      const S* xr = x.row(tp);
      const S* wk = wr + dt * L.n_in;
      for (int ic = 0; ic < L.n_in; ++ic) acc = std::fma(wk[ic], xr[ic], acc);
    }
    out[oc] = acc + L.weights.b[oc];
  }
}

template <typename S>
inline void dense_current(const Layer<S>& L, const Mat<S>& x, int t,
                          const S* own_prev, S* out) {
  for (int i = 0; i < L.n_out; ++i) {
    const S* wi = L.weights.w.row(i);
    const S* xr = x.row(t);
    S acc = S(0);
    for (int j = 0; j < L.n_in; ++j) acc = std::fma(wi[j], xr[j], acc);
    if (own_prev) {
      const S* ri = L.weights.w_rec.row(i);
      for (int j = 0; j < L.n_out; ++j) acc = std::fma(ri[j], own_prev[j], acc);
    }
    out[i] = acc + L.weights.b[i];
  }
}

}  // namespace detail

// Step one layer over all T frames. Input may be binary spikes or real
// features; both drive the LIF current identically.
template <typename S>
inline LayerActivations<S> layer_forward(const Layer<S>& L, const Mat<S>& input,
                                         const LifParams& p,
                                         Activation mode = Activation::Spiking) {
  L.validate();
  p.validate();
  require(input.rows >= 1, "layer_forward: empty input");
  require_eq(input.cols, L.n_in, "layer_forward: input width != n_in");
  const int T = input.rows;
  LayerActivations<S> acts{Mat<S>(T, L.n_out), Mat<S>(T, L.n_out)};
  LifState<S> state(L.n_out);
  std::vector<S> current(L.n_out);
  for (int t = 0; t < T; ++t) {
    if (L.kind == LayerKind::Conv1D) {
      detail::conv_current(L, input, t, current.data());
    } else {
      const S* own_prev = nullptr;
      if (L.kind == LayerKind::Recurrent && t >= 1) own_prev = acts.o.row(t - 1);
      static thread_local std::vector<S> zeros;
      if (L.kind == LayerKind::Recurrent && t == 0) {
        zeros.assign(L.n_out, S(0));
        own_prev = zeros.data();
      }
      detail::dense_current(L, input, t, own_prev, current.data());
    }
    lif_step_inplace(state, current.data(), L.n_out, p, acts.o.row(t), mode);
    for (int i = 0; i < L.n_out; ++i) acts.u.at(t, i) = state.u[i];
  }
  return acts;
}

template <typename S>
struct LayerGrads {
  Mat<S> g_w;
  std::vector<S> g_b;
  Mat<S> g_wrec;
  Mat<S> g_input;  // gradient on this layer's input tensor
};

// Reverse pass through one layer's unrolled time axis. g_out carries
// dL/do[t,i] from downstream consumers. The boxcar surrogate stands in for
// the Heaviside derivative; in relaxed mode it is the exact derivative
// almost everywhere, which is what makes finite-difference checks valid.
template <typename S>
inline LayerGrads<S> layer_backward(const Layer<S>& L, const Mat<S>& input,
                                    const LayerActivations<S>& acts,
                                    const Mat<S>& g_out, const LifParams& p) {
  const int T = input.rows;
  require(acts.u.rows == T && acts.o.rows == T && acts.u.cols == L.n_out,
          "layer_backward: tape does not match layer");
  require(g_out.rows == T && g_out.cols == L.n_out,
          "layer_backward: output gradient shape mismatch");
  const S alpha = S(p.alpha);
  const S theta = S(p.theta);
  const int off = L.kernel / 2;

  LayerGrads<S> g;
  g.g_w = Mat<S>(L.weights.w.rows, L.weights.w.cols);
  g.g_b.assign(L.n_out, S(0));
  if (L.weights.has_rec()) g.g_wrec = Mat<S>(L.n_out, L.n_out);
  g.g_input = Mat<S>(T, L.n_in);

  std::vector<S> gu_next(L.n_out, S(0));      // dL/du[t+1]
  std::vector<S> go_rec_next(L.n_out, S(0));  // w_rec^T gu[t+1]
  std::vector<S> gu(L.n_out);

  for (int t = T - 1; t >= 0; --t) {
    for (int i = 0; i < L.n_out; ++i) {
      S go = g_out.at(t, i) + go_rec_next[i] - theta * gu_next[i];
      gu[i] = go * surrogate_grad(acts.u.at(t, i), p) + alpha * gu_next[i];
    }
    for (int i = 0; i < L.n_out; ++i) g.g_b[i] += gu[i];

    if (L.kind == LayerKind::Conv1D) {
      for (int oc = 0; oc < L.n_out; ++oc) {
        const S gi = gu[oc];
        if (gi == S(0)) continue;
        S* gwr = g.g_w.row(oc);
        const S* wr = L.weights.w.row(oc);
        for (int dt = 0; dt < L.kernel; ++dt) {
          const int tp = t + dt - off;
          if (tp < 0 || tp >= T) continue;
          const S* xr = input.row(tp);
          S* gxr = g.g_input.row(tp);
          S* gwk = gwr + dt * L.n_in;
          const S* wk = wr + dt * L.n_in;
          for (int ic = 0; ic < L.n_in; ++ic) {
            gwk[ic] += gi * xr[ic];
            gxr[ic] += wk[ic] * gi;
          }
        }
      }
    } else {
      const S* xr = input.row(t);
      S* gxr = g.g_input.row(t);
      for (int i = 0; i < L.n_out; ++i) {
        const S gi = gu[i];
        if (gi == S(0)) continue;
        S* gwr = g.g_w.row(i);
        const S* wr = L.weights.w.row(i);
        for (int j = 0; j < L.n_in; ++j) {
          gwr[j] += gi * xr[j];
          gxr[j] += wr[j] * gi;
        }
      }
      if (L.kind == LayerKind::Recurrent && t >= 1) {
        const S* op = acts.o.row(t - 1);
        for (int i = 0; i < L.n_out; ++i) {
          const S gi = gu[i];
          if (gi == S(0)) continue;
          S* grr = g.g_wrec.row(i);
          for (int j = 0; j < L.n_out; ++j) grr[j] += gi * op[j];
        }
      }
    }

    // Propagate to t-1 through the self-recurrent current.
    std::fill(go_rec_next.begin(), go_rec_next.end(), S(0));
    if (L.kind == LayerKind::Recurrent && t >= 1) {
      for (int i = 0; i < L.n_out; ++i) {
        const S gi = gu[i];
        if (gi == S(0)) continue;
        const S* ri = L.weights.w_rec.row(i);
        for (int j = 0; j < L.n_out; ++j) go_rec_next[j] += ri[j] * gi;
      }
    }
    gu_next = gu;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Layer stacks: plain sequential composition used by the snn-core level
// operations and the gradient-check harness.
// ---------------------------------------------------------------------------

template <typename S>
struct Tape {
  Mat<S> input;
  std::vector<LayerActivations<S>> acts;
  Activation mode = Activation::Spiking;
};

template <typename S>
struct StackResult {
  Mat<S> output;
  Tape<S> tape;
  RunTrace trace;
};

template <typename S>
inline void validate_stack(const std::vector<Layer<S>>& stack, int input_cols) {
  require(!stack.empty(), "stack: no layers");
  int w = input_cols;
  for (const auto& L : stack) {
    L.validate();
    require_eq(L.n_in, w, "stack: layer input width does not chain");
    w = L.n_out;
  }
}

// Nominal downstream synapses per spike of layer l: the fan into layer l+1
// (kernel * out_ch for a conv consumer) plus its own recurrent fan when the
// layer feeds back into itself.
template <typename S>
inline int stack_fan_out(const std::vector<Layer<S>>& stack, size_t l) {
  int fan = 0;
  if (l + 1 < stack.size()) {
    const auto& next = stack[l + 1];
    fan += next.kind == LayerKind::Conv1D ? next.kernel * next.n_out : next.n_out;
  }
  if (stack[l].kind == LayerKind::Recurrent) fan += stack[l].n_out;
  return fan;
}

template <typename S>
inline StackResult<S> forward_recorded(const std::vector<Layer<S>>& stack,
                                       const Mat<S>& input, const LifParams& p,
                                       Activation mode = Activation::Spiking) {
  validate_stack(stack, input.cols);
  require(input.rows >= 1, "forward_recorded: empty input");
  StackResult<S> r;
  r.tape.input = input;
  r.tape.mode = mode;
  r.trace.timesteps = input.rows;
  const Mat<S>* x = &input;
  for (size_t l = 0; l < stack.size(); ++l) {
    r.tape.acts.push_back(layer_forward(stack[l], *x, p, mode));
    x = &r.tape.acts.back().o;
    r.trace.layers.push_back(TraceEntry{
        stack[l].name.empty() ? "layer" + std::to_string(l) : stack[l].name,
        stack[l].n_out, popcount(*x), stack_fan_out(stack, l), true});
  }
  r.output = *x;
  return r;
}

// Unrecorded forward pass; must agree with forward_recorded bit for bit.
template <typename S>
inline Mat<S> forward(const std::vector<Layer<S>>& stack, const Mat<S>& input,
                      const LifParams& p, Activation mode = Activation::Spiking) {
  validate_stack(stack, input.cols);
  require(input.rows >= 1, "forward: empty input");
  Mat<S> x = input;
  for (const auto& L : stack) x = layer_forward(L, x, p, mode).o;
  return x;
}

template <typename S>
inline Mat<S> relaxed_forward(const std::vector<Layer<S>>& stack,
                              const Mat<S>& input, const LifParams& p) {
  return forward(stack, input, p, Activation::Relaxed);
}

template <typename S>
struct StackGrads {
  std::vector<LayerGrads<S>> layers;
  Mat<S> g_input;
};

template <typename S>
inline StackGrads<S> bptt_backward(const std::vector<Layer<S>>& stack,
                                   const Tape<S>& tape, const Mat<S>& g_out,
                                   const LifParams& p) {
  validate_stack(stack, tape.input.cols);
  require_eq(tape.acts.size(), stack.size(), "bptt_backward: tape/stack mismatch");
  StackGrads<S> g;
  g.layers.resize(stack.size());
  Mat<S> grad = g_out;
  for (size_t l = stack.size(); l-- > 0;) {
    const Mat<S>& in = l == 0 ? tape.input : tape.acts[l - 1].o;
    g.layers[l] = layer_backward(stack[l], in, tape.acts[l], grad, p);
    grad = std::move(g.layers[l].g_input);
    g.layers[l].g_input = Mat<S>();  // moved into the next stage
  }
  g.g_input = std::move(grad);
  return g;
}

}  // namespace svad
