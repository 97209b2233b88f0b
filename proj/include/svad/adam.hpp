// adam.hpp — Adam with bias correction over the model's parameter arrays.
// First and second moments are kept in double regardless of the parameter
// precision; the tiny late-schedule steps on the filterbank cutoffs would
// otherwise round away. Also hosts global-norm gradient clipping.
#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "svad/model.hpp"
#include "svad/tensor.hpp"

namespace svad {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long t = 0;                          // completed steps
  std::vector<std::vector<double>> m;  // one slot per array, visitation order
  std::vector<std::vector<double>> v;
};

namespace detail {

struct ArrRef {
  void* p;
  size_t n;
  bool is_double;
};

template <typename S>
inline std::vector<ArrRef> param_refs(ModelParams<S>& params) {
  std::vector<ArrRef> out;
  visit_arrays(params, [&](const char*, auto* p, size_t n) {
    using E = std::remove_cv_t<std::remove_pointer_t<decltype(p)>>;
    out.push_back({static_cast<void*>(p), n, std::is_same_v<E, double>});
  });
  return out;
}

template <typename S>
inline std::vector<ArrRef> grad_refs(const ArchDescriptor& arch, ModelGrads<S>& grads) {
  std::vector<ArrRef> out;
  visit_grad_arrays(arch, grads, [&](const char*, auto* p, size_t n) {
    using E = std::remove_cv_t<std::remove_pointer_t<decltype(p)>>;
    out.push_back({static_cast<void*>(p), n, std::is_same_v<E, double>});
  });
  return out;
}

}  // namespace detail

// L2 norm over every gradient element, all arrays pooled.
template <typename S>
inline double grad_global_norm(const ArchDescriptor& arch, ModelGrads<S>& grads) {
  double sq = 0.0;
  visit_grad_arrays(arch, grads, [&](const char*, auto* p, size_t n) {
    for (size_t i = 0; i < n; ++i) sq += static_cast<double>(p[i]) * static_cast<double>(p[i]);
  });
  return std::sqrt(sq);
}

// Rescale in place when the pooled norm exceeds max_norm; max_norm <= 0
// disables clipping. Returns the pre-clip norm.
template <typename S>
inline double clip_global_norm(const ArchDescriptor& arch, ModelGrads<S>& grads,
                               double max_norm) {
  const double norm = grad_global_norm(arch, grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    visit_grad_arrays(arch, grads, [&](const char*, auto* p, size_t n) {
      for (size_t i = 0; i < n; ++i)
        p[i] = static_cast<std::remove_pointer_t<decltype(p)>>(
            static_cast<double>(p[i]) * scale);
    });
  }
  return norm;
}

template <typename S>
inline void adam_step(AdamState& st, ModelParams<S>& params, ModelGrads<S>& grads,
                      double lr) {
  auto pv = detail::param_refs(params);
  auto gv = detail::grad_refs(params.arch, grads);
  require_eq(pv.size(), gv.size(), "adam_step: param/grad array mismatch");
  if (st.m.empty()) {
    st.m.resize(pv.size());
    st.v.resize(pv.size());
    for (size_t a = 0; a < pv.size(); ++a) {
      st.m[a].assign(pv[a].n, 0.0);
      st.v[a].assign(pv[a].n, 0.0);
    }
  }
  require_eq(st.m.size(), pv.size(), "adam_step: stale optimizer state");
  st.t += 1;
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.t));

  auto update = [&](auto* p, auto* g, size_t n, std::vector<double>& m,
                    std::vector<double>& v) {
    using P = std::remove_pointer_t<decltype(p)>;
    for (size_t i = 0; i < n; ++i) {
      const double gi = static_cast<double>(g[i]);
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] = static_cast<P>(static_cast<double>(p[i]) -
                            lr * mhat / (std::sqrt(vhat) + st.cfg.eps));
    }
  };
  for (size_t a = 0; a < pv.size(); ++a) {
    require(pv[a].n == gv[a].n && pv[a].is_double == gv[a].is_double &&
                st.m[a].size() == pv[a].n,
            "adam_step: array shape drift");
    if (pv[a].is_double)
      update(static_cast<double*>(pv[a].p), static_cast<double*>(gv[a].p), pv[a].n,
             st.m[a], st.v[a]);
    else
      update(static_cast<S*>(pv[a].p), static_cast<S*>(gv[a].p), pv[a].n, st.m[a],
             st.v[a]);
  }
}

}  // namespace svad
