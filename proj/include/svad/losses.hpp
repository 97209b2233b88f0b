// losses.hpp — frame-wise softmax cross entropy on the readout potentials
// plus the mean squared penalty that pulls the gated encoder output toward
// its clean-signal counterpart. Loss values are returned as plain sums so a
// caller accumulating gradients over several utterances can divide once by
// the batch-wide frame (or element) count; the matching gradient helpers
// take that normalizer explicitly.
#pragma once

#include <cmath>
#include <vector>

#include "svad/tensor.hpp"

namespace svad {

constexpr double kProbFloor = 1e-12;

// Row-wise softmax with the usual max shift.
template <typename S>
inline Mat<S> softmax_rows(const Mat<S>& v) {
  Mat<S> p(v.rows, v.cols);
  for (int t = 0; t < v.rows; ++t) {
    const S* row = v.row(t);
    S mx = row[0];
    for (int c = 1; c < v.cols; ++c) mx = std::max(mx, row[c]);
    S sum = S(0);
    S* pr = p.row(t);
    for (int c = 0; c < v.cols; ++c) {
      pr[c] = std::exp(row[c] - mx);
      sum += pr[c];
    }
    for (int c = 0; c < v.cols; ++c) pr[c] /= sum;
  }
  return p;
}

// Sum of -log p[t][label[t]] over frames, probabilities floored before the
// log. Divide by the total frame count to get the mean.
template <typename S>
inline double ce_loss_sum(const Mat<S>& probs, const std::vector<int>& labels) {
  require_eq(static_cast<int>(labels.size()), probs.rows, "ce_loss: label count");
  double sum = 0.0;
  for (int t = 0; t < probs.rows; ++t) {
    require(labels[t] >= 0 && labels[t] < probs.cols, "ce_loss: label out of range");
    sum -= std::log(std::max(static_cast<double>(probs.at(t, labels[t])), kProbFloor));
  }
  return sum;
}

// Gradient of mean CE w.r.t. the pre-softmax potentials: (p - onehot) / norm,
// where norm is the frame count the mean runs over.
template <typename S>
inline Mat<S> ce_grad_v(const Mat<S>& probs, const std::vector<int>& labels,
                        double inv_norm) {
  require_eq(static_cast<int>(labels.size()), probs.rows, "ce_grad: label count");
  Mat<S> g(probs.rows, probs.cols);
  for (int t = 0; t < probs.rows; ++t) {
    for (int c = 0; c < probs.cols; ++c)
      g.at(t, c) = static_cast<S>(probs.at(t, c) * inv_norm);
    g.at(t, labels[t]) -= static_cast<S>(inv_norm);
  }
  return g;
}

// Sum of squared residuals; divide by total element count for the mean.
// The target is a fixed tensor: no gradient flows into it.
template <typename S>
inline double mse_loss_sum(const Mat<S>& pred, const Mat<S>& target) {
  require(pred.same_shape(target), "mse_loss: shape mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
    sum += d * d;
  }
  return sum;
}

template <typename S>
inline Mat<S> mse_grad(const Mat<S>& pred, const Mat<S>& target, double inv_norm) {
  require(pred.same_shape(target), "mse_grad: shape mismatch");
  Mat<S> g(pred.rows, pred.cols);
  for (size_t i = 0; i < pred.v.size(); ++i)
    g.v[i] = static_cast<S>(2.0 * (static_cast<double>(pred.v[i]) -
                                   static_cast<double>(target.v[i])) * inv_norm);
  return g;
}

}  // namespace svad
