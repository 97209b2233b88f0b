// lif.hpp — discrete-time leaky integrate-and-fire neuron with soft reset,
// the boxcar surrogate derivative used by BPTT, and the clipped-linear
// relaxation used for gradient verification.
//
// Membrane update per step:   u' = alpha*u + i - theta*o_prev
// Spiking output:             o  = 1 if u' >= theta else 0
// Relaxed output:             o  = clamp((u' - theta)/a + 1/2, 0, 1)
//
// The soft reset subtracts theta on the step AFTER a spike via o_prev; the
// membrane is not zeroed.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "svad/tensor.hpp"

namespace svad {

struct LifParams {
  double alpha = 0.5;  // membrane decay per step, in [0, 1)
  double theta = 0.3;  // firing threshold, > 0
  double a = 4.0;      // surrogate window width, > 0

  void validate() const {
    require(alpha >= 0.0 && alpha < 1.0, "LifParams: alpha must be in [0, 1)");
    require(theta > 0.0, "LifParams: theta must be > 0");
    require(a > 0.0, "LifParams: a must be > 0");
  }
};

enum class Activation {
  Spiking,  // Heaviside with the >= convention (spike exactly at threshold)
  Relaxed,  // clipped-linear ramp; exact derivative is the boxcar below
};

template <typename S>
struct LifState {
  std::vector<S> u;       // membrane potentials
  std::vector<S> o_prev;  // previous-step outputs

  explicit LifState(int n = 0) : u(n, S(0)), o_prev(n, S(0)) {}
  int size() const { return static_cast<int>(u.size()); }
};

// Boxcar surrogate for the Heaviside derivative: 1/a inside the open window
// |u - theta| < a/2, zero outside (the boundary itself returns zero).
template <typename S>
inline S surrogate_grad(S u, const LifParams& p) {
  S d = u - S(p.theta);
  if (d < S(0)) d = -d;
  return d < S(p.a) / S(2) ? S(1) / S(p.a) : S(0);
}

// Relaxed activation whose derivative equals surrogate_grad away from the
// two kink points.
template <typename S>
inline S relaxed_sigma(S u, const LifParams& p) {
  S x = (u - S(p.theta)) / S(p.a) + S(0.5);
  return std::clamp(x, S(0), S(1));
}

template <typename S>
inline S activate(S u, const LifParams& p, Activation mode) {
  if (mode == Activation::Spiking) return u >= S(p.theta) ? S(1) : S(0);
  return relaxed_sigma(u, p);
}

// One LIF step over a layer of neurons. Updates `state` in place and writes
// the output into `spikes`. After the call state.u holds the post-update
// membrane (needed by the backward pass) and state.o_prev the new output.
template <typename S>
inline void lif_step_inplace(LifState<S>& state, const S* current, int n,
                             const LifParams& p, S* spikes,
                             Activation mode = Activation::Spiking) {
  require_eq(state.size(), n, "lif_step: current length != neuron count");
  const S alpha = S(p.alpha);
  const S theta = S(p.theta);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(double(current[i])))
      throw std::runtime_error("lif_step: non-finite input current");
    S u = alpha * state.u[i] + current[i] - theta * state.o_prev[i];
    S o = activate(u, p, mode);
    state.u[i] = u;
    state.o_prev[i] = o;
    spikes[i] = o;
  }
}

// Pure variant matching the operation contract: returns the updated state
// and the spike vector.
template <typename S>
inline std::pair<LifState<S>, std::vector<S>> lif_step(
    const LifState<S>& state, const std::vector<S>& current,
    const LifParams& p, Activation mode = Activation::Spiking) {
  LifState<S> next = state;
  std::vector<S> spikes(current.size(), S(0));
  lif_step_inplace(next, current.data(), static_cast<int>(current.size()), p,
                   spikes.data(), mode);
  return {next, spikes};
}

}  // namespace svad
