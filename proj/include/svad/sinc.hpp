// sinc.hpp — learnable band-pass FIR filterbank. Each filter is the
// difference of two windowed sinc low-pass kernels, parametrized by a lower
// cutoff and a bandwidth so the band edges cannot cross. Cutoffs live in
// normalized frequency (cycles per sample) and are kept in double precision:
// single precision would visibly distort the mel spacing of the initial
// cutoffs, and the Adam steps on these parameters are far below float32
// resolution at audio scale.
#pragma once

#include <cmath>
#include <vector>

#include "svad/tensor.hpp"

namespace svad {

inline double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double hz_from_mel(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

struct SincBank {
  int n_filters = 0;
  int kernel_len = 0;  // odd tap count
  double fs = 16000.0;
  // Learnable, normalized by fs. Band edges: f1 and f1 + band.
  std::vector<double> f1_norm;
  std::vector<double> band_norm;

  static constexpr double kMinHz = 1.0;  // floor for both cutoff and width

  void validate() const {
    require(n_filters >= 1, "SincBank: need at least one filter");
    require(kernel_len >= 3 && kernel_len % 2 == 1, "SincBank: kernel_len must be odd >= 3");
    require(fs > 0.0, "SincBank: fs must be positive");
    require_eq(static_cast<int>(f1_norm.size()), n_filters, "SincBank: f1 size");
    require_eq(static_cast<int>(band_norm.size()), n_filters, "SincBank: band size");
    for (int k = 0; k < n_filters; ++k)
      require(std::isfinite(f1_norm[k]) && std::isfinite(band_norm[k]),
              "SincBank: non-finite cutoff");
  }

  double lo1() const { return kMinHz / fs; }
  double hi1() const { return 0.5 - kMinHz / fs; }
  double lob() const { return kMinHz / fs; }

  // Effective (clamped) normalized edges for filter k.
  void effective(int k, double* f1e, double* f2e) const {
    double f1 = std::min(std::max(f1_norm[k], lo1()), hi1());
    double band = std::min(std::max(band_norm[k], lob()), 0.5 - f1);
    *f1e = f1;
    *f2e = f1 + band;
  }
};

// Hamming taper over the full kernel.
inline std::vector<double> hamming_window(int len) {
  std::vector<double> w(len);
  for (int i = 0; i < len; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (len - 1));
  return w;
}

// Mel-spaced initialization: n_filters + 2 points equally spaced on the mel
// scale between f_lo_hz and fs/2; filter k spans points k..k+2 so adjacent
// bands overlap by half.
inline void init_mel_cutoffs(SincBank& bank, double f_lo_hz = 30.0) {
  require(bank.n_filters >= 1, "init_mel_cutoffs: empty bank");
  require(f_lo_hz > 0.0 && f_lo_hz < bank.fs / 2.0, "init_mel_cutoffs: bad f_lo");
  const int n_pts = bank.n_filters + 2;
  const double m_lo = mel_from_hz(f_lo_hz);
  const double m_hi = mel_from_hz(bank.fs / 2.0);
  std::vector<double> pts(n_pts);
  for (int j = 0; j < n_pts; ++j)
    pts[j] = hz_from_mel(m_lo + (m_hi - m_lo) * j / (n_pts - 1));
  bank.f1_norm.resize(bank.n_filters);
  bank.band_norm.resize(bank.n_filters);
  for (int k = 0; k < bank.n_filters; ++k) {
    bank.f1_norm[k] = pts[k] / bank.fs;
    bank.band_norm[k] = (pts[k + 2] - pts[k]) / bank.fs;
  }
}

// Materialize the FIR taps: kernel[k][i] = (2 f2 sinc(2 pi f2 n) -
// 2 f1 sinc(2 pi f1 n)) * w[i] with n = i - (L-1)/2.
template <typename S>
inline Mat<S> sinc_kernels(const SincBank& bank) {
  bank.validate();
  const int L = bank.kernel_len;
  const int mid = (L - 1) / 2;
  const std::vector<double> w = hamming_window(L);
  Mat<S> k(bank.n_filters, L);
  for (int f = 0; f < bank.n_filters; ++f) {
    double f1, f2;
    bank.effective(f, &f1, &f2);
    for (int i = 0; i < L; ++i) {
      const double n = i - mid;
      const double g = 2.0 * f2 * sinc(2.0 * M_PI * f2 * n) -
                       2.0 * f1 * sinc(2.0 * M_PI * f1 * n);
      k.at(f, i) = static_cast<S>(g * w[i]);
    }
  }
  return k;
}

struct SincGrads {
  std::vector<double> g_f1;
  std::vector<double> g_band;
};

// d kernel[i] / d f = 2 cos(2 pi f n) w[i] for the f2 term (negated for f1);
// the low-pass component 2 f sinc(2 pi f n) is sin(2 pi f n) / (pi n), whose
// f-derivative collapses to a plain cosine. Clamped parameters get zero
// gradient; a bandwidth pinned at the Nyquist ceiling also kills the f1
// dependence of the upper edge.
template <typename S>
inline SincGrads sinc_kernels_backward(const SincBank& bank, const Mat<S>& g_kernels) {
  bank.validate();
  require(g_kernels.rows == bank.n_filters && g_kernels.cols == bank.kernel_len,
          "sinc_kernels_backward: gradient shape mismatch");
  const int L = bank.kernel_len;
  const int mid = (L - 1) / 2;
  const std::vector<double> w = hamming_window(L);
  SincGrads g;
  g.g_f1.assign(bank.n_filters, 0.0);
  g.g_band.assign(bank.n_filters, 0.0);
  for (int f = 0; f < bank.n_filters; ++f) {
    double f1, f2;
    bank.effective(f, &f1, &f2);
    const bool f1_inside =
        bank.f1_norm[f] > bank.lo1() && bank.f1_norm[f] < bank.hi1();
    const bool band_at_ceiling = bank.band_norm[f] >= 0.5 - f1;
    const bool band_inside =
        bank.band_norm[f] > bank.lob() && !band_at_ceiling;
    // f2 = f1_eff + band_eff; if the band is pinned at the ceiling the upper
    // edge is the Nyquist constant and moving f1 no longer moves f2.
    const double df2_df1p = f1_inside ? (band_at_ceiling ? 0.0 : 1.0) : 0.0;
    const double df1_df1p = f1_inside ? 1.0 : 0.0;
    const double df2_dbandp = band_inside ? 1.0 : 0.0;
    double acc_f1 = 0.0, acc_f2 = 0.0;
    for (int i = 0; i < L; ++i) {
      const double n = i - mid;
      const double gk = static_cast<double>(g_kernels.at(f, i));
      acc_f2 += gk * 2.0 * std::cos(2.0 * M_PI * f2 * n) * w[i];
      acc_f1 -= gk * 2.0 * std::cos(2.0 * M_PI * f1 * n) * w[i];
    }
    g.g_f1[f] = acc_f1 * df1_df1p + acc_f2 * df2_df1p;
    g.g_band[f] = acc_f2 * df2_dbandp;
  }
  return g;
}

// Apply the filterbank along the waveform with same zero padding.
// Output row c holds filter c's response at every sample.
template <typename S>
inline Mat<S> filterbank_forward(const Mat<S>& kernels, const std::vector<S>& wave) {
  require(kernels.rows >= 1 && kernels.cols % 2 == 1, "filterbank_forward: bad kernels");
  const int n = static_cast<int>(wave.size());
  require(n >= 1, "filterbank_forward: empty waveform");
  const int L = kernels.cols;
  const int mid = (L - 1) / 2;
  Mat<S> out(kernels.rows, n);
  const S* w = wave.data();
  // Tap-outer loop: the inner pass over samples has independent accumulators,
  // and each output still receives its terms in ascending tap order.
  for (int c = 0; c < kernels.rows; ++c) {
    const S* k = kernels.row(c);
    S* y = out.row(c);
    for (int i = 0; i < L; ++i) {
      const int d = i - mid;
      const int s0 = std::max(0, -d);
      const int s1 = std::min(n, n - d);
      const S ki = k[i];
      for (int s = s0; s < s1; ++s) y[s] += ki * w[s + d];
    }
  }
  return out;
}

// Gradient of the filtered signal w.r.t. the taps. The waveform itself is
// a network input and never needs a gradient.
template <typename S>
inline Mat<S> filterbank_backward_kernels(const std::vector<S>& wave,
                                          const Mat<S>& g_filtered, int kernel_len) {
  const int n = static_cast<int>(wave.size());
  require(g_filtered.cols == n, "filterbank_backward_kernels: width mismatch");
  require(kernel_len >= 1 && kernel_len % 2 == 1, "filterbank_backward_kernels: bad kernel_len");
  const int mid = (kernel_len - 1) / 2;
  Mat<S> g_k(g_filtered.rows, kernel_len);
  const S* w = wave.data();
  // Sample-outer loop: the inner pass over taps has independent accumulators,
  // and each tap gradient still receives its terms in ascending sample order.
  for (int c = 0; c < g_filtered.rows; ++c) {
    const S* gy = g_filtered.row(c);
    S* gk = g_k.row(c);
    for (int s = 0; s < n; ++s) {
      const S g = gy[s];
      const int i0 = std::max(0, mid - s);
      const int i1 = std::min(kernel_len, n + mid - s);
      const int base = s - mid;
      for (int i = i0; i < i1; ++i) gk[i] += g * w[base + i];
    }
  }
  return g_k;
}

}  // namespace svad
