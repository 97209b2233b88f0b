// gradcheck.hpp — finite-difference verification of the reverse pass. Runs
// in relaxed mode, where the hard threshold is replaced by a clipped ramp:
// there the boxcar is the exact derivative almost everywhere, so central
// differences must agree with the analytic gradients. Trials whose membrane
// traces come too close to the ramp's kinks (|u - theta -+ a/2| below a
// margin) are resampled, since finite differences are invalid across a kink.
// Double precision throughout.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "svad/layers.hpp"

namespace svad {

struct GradcheckReport {
  int trials = 0;
  long n_checked = 0;       // scalar comparisons performed
  double max_rel_err = 0.0;
  int resamples = 0;
  bool passed(double tol = 1e-4) const { return trials > 0 && max_rel_err < tol; }
};

namespace gradcheck_detail {

inline double urand(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double urange(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * urand(rng);
}

inline Layer<double> random_layer(std::mt19937_64& rng, int n_in, int n_out) {
  Layer<double> L;
  const unsigned kind = static_cast<unsigned>(rng() % 3);
  L.kind = kind == 0 ? LayerKind::Dense
                     : (kind == 1 ? LayerKind::Recurrent : LayerKind::Conv1D);
  L.kernel = L.kind == LayerKind::Conv1D ? 3 : 1;
  L.n_in = n_in;
  L.n_out = n_out;
  const double s = std::sqrt(1.0 / (n_in * L.kernel));
  L.weights.w = Mat<double>(n_out, n_in * L.kernel);
  for (auto& w : L.weights.w.v) w = urange(rng, -s, s);
  L.weights.b.resize(n_out);
  for (auto& b : L.weights.b) b = urange(rng, -0.2, 0.2);
  if (L.kind == LayerKind::Recurrent) {
    const double sr = std::sqrt(1.0 / n_out);
    L.weights.w_rec = Mat<double>(n_out, n_out);
    for (auto& w : L.weights.w_rec.v) w = urange(rng, -sr, sr);
  }
  return L;
}

// Distance of every recorded membrane value from the nearest ramp kink.
inline double kink_margin(const Tape<double>& tape, const LifParams& p) {
  double margin = 1e9;
  const double lo = p.theta - p.a / 2.0;
  const double hi = p.theta + p.a / 2.0;
  for (const auto& acts : tape.acts)
    for (const double u : acts.u.v)
      margin = std::min({margin, std::fabs(u - lo), std::fabs(u - hi)});
  return margin;
}

}  // namespace gradcheck_detail

// Scalar loss for the harness: a fixed random linear functional of the
// stack's output spikes.
inline double gradcheck_loss(const std::vector<Layer<double>>& stack,
                             const Mat<double>& input, const Mat<double>& loss_w,
                             const LifParams& p) {
  const Mat<double> out = forward(stack, input, p, Activation::Relaxed);
  require(out.same_shape(loss_w), "gradcheck_loss: loss weight shape");
  double l = 0.0;
  for (size_t i = 0; i < out.v.size(); ++i) l += out.v[i] * loss_w.v[i];
  return l;
}

// One verified trial: analytic gradients from bptt_backward against central
// differences for every weight, bias, recurrent weight, and input entry.
// Returns false if the trial was rejected for insufficient kink margin.
inline bool gradcheck_trial(std::mt19937_64& rng, double* max_rel_err, long* n_checked,
                            double eps = 1e-4, double margin = 1e-2) {
  using namespace gradcheck_detail;
  LifParams p;  // default constants; relaxed ramp spans theta -+ a/2

  const int n_layers = 1 + static_cast<int>(rng() % 3);
  const int T = 2 + static_cast<int>(rng() % 9);
  std::vector<int> widths(n_layers + 1);
  for (auto& w : widths) w = 3 + static_cast<int>(rng() % 6);
  std::vector<Layer<double>> stack;
  for (int l = 0; l < n_layers; ++l)
    stack.push_back(random_layer(rng, widths[l], widths[l + 1]));

  // Every third trial drives the membranes hard enough to saturate the ramp,
  // so the zero-derivative branch gets exercised too.
  const double in_scale = rng() % 3 == 0 ? 4.0 : 1.0;
  Mat<double> input(T, widths[0]);
  for (auto& x : input.v) x = urange(rng, -in_scale, in_scale);
  Mat<double> loss_w(T, widths[n_layers]);
  for (auto& w : loss_w.v) w = urange(rng, -1.0, 1.0);

  StackResult<double> fwd = forward_recorded(stack, input, p, Activation::Relaxed);
  if (kink_margin(fwd.tape, p) < margin) return false;

  const StackGrads<double> g = bptt_backward(stack, fwd.tape, loss_w, p);

  auto check = [&](double analytic, double* slot) {
    const double save = *slot;
    *slot = save + eps;
    const double lp = gradcheck_loss(stack, input, loss_w, p);
    *slot = save - eps;
    const double lm = gradcheck_loss(stack, input, loss_w, p);
    *slot = save;
    const double fd = (lp - lm) / (2.0 * eps);
    const double rel = std::fabs(analytic - fd) /
                       std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    *max_rel_err = std::max(*max_rel_err, rel);
    ++*n_checked;
  };

  for (int l = 0; l < n_layers; ++l) {
    for (size_t i = 0; i < stack[l].weights.w.v.size(); ++i)
      check(g.layers[l].g_w.v[i], &stack[l].weights.w.v[i]);
    for (size_t i = 0; i < stack[l].weights.b.size(); ++i)
      check(g.layers[l].g_b[i], &stack[l].weights.b[i]);
    for (size_t i = 0; i < stack[l].weights.w_rec.v.size(); ++i)
      check(g.layers[l].g_wrec.v[i], &stack[l].weights.w_rec.v[i]);
  }
  for (size_t i = 0; i < input.v.size(); ++i) check(g.g_input.v[i], &input.v[i]);
  return true;
}

inline GradcheckReport run_gradcheck(uint64_t seed, int n_trials = 100) {
  GradcheckReport r;
  std::mt19937_64 rng(seed);
  int guard = 0;
  while (r.trials < n_trials) {
    if (gradcheck_trial(rng, &r.max_rel_err, &r.n_checked)) {
      ++r.trials;
    } else {
      ++r.resamples;
      require(++guard < n_trials * 50 + 1000, "gradcheck: too many kink resamples");
    }
  }
  return r;
}

}  // namespace svad
