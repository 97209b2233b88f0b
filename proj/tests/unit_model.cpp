#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "svad/corpus.hpp"
#include "svad/model.hpp"

using namespace svad;

namespace {

std::vector<double> widen(const std::vector<float>& x) {
  return std::vector<double>(x.begin(), x.end());
}

}  // namespace

TEST_CASE("parameter budgets match the architecture table") {
  CHECK(param_count(make_arch("svad")) == 4282);
  CHECK(param_count(make_arch("svad-s")) == 2432);
  CHECK(param_count(make_arch("svad", "no_sconv")) == 3062);
  CHECK(param_count(make_arch("svad", "no_sconv_no_attn")) == 1802);

  // The instantiated arrays add up to the same totals.
  for (const char* variant : {"svad", "svad-s"}) {
    ModelParams<float> mp = init_params<float>(make_arch(variant), 1);
    CHECK(param_count(mp) == param_count(mp.arch));
  }
}

TEST_CASE("arrays visit in the fixed serialization order") {
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 1);
  std::vector<std::string> names;
  visit_arrays(mp, [&](const char* n, auto*, size_t) { names.emplace_back(n); });
  const std::vector<std::string> want = {
      "sinc.f1",  "sinc.band", "sconv.w",  "sconv.b",  "attn0.w",
      "attn0.b",  "attn1.w",   "attn1.b",  "attn2.w",  "attn2.b",
      "hidden.w", "hidden.b",  "hidden.w_rec", "readout.w", "readout.b"};
  CHECK(names == want);

  ModelParams<float> nc = init_params<float>(make_arch("svad-s", "no_sconv"), 1);
  names.clear();
  visit_arrays(nc, [&](const char* n, auto*, size_t) { names.emplace_back(n); });
  const std::vector<std::string> want_nc = {
      "sinc.f1",  "sinc.band", "attn0.w", "attn0.b",   "attn1.w",
      "attn1.b",  "hidden.w",  "hidden.b", "hidden.w_rec", "readout.w", "readout.b"};
  CHECK(names == want_nc);

  // Gradient arrays mirror the parameter visitation exactly.
  ModelGrads<float> g = make_grads(mp);
  std::vector<std::string> gnames;
  visit_grad_arrays(mp.arch, g, [&](const char* n, auto*, size_t) { gnames.emplace_back(n); });
  CHECK(gnames == want);
}

TEST_CASE("gradient accumulation sums array by array") {
  ModelParams<float> mp = init_params<float>(make_arch("svad-s"), 2);
  ModelGrads<float> acc = make_grads(mp);
  ModelGrads<float> g = make_grads(mp);
  visit_grad_arrays(mp.arch, g, [&](const char*, auto* p, size_t n) {
    for (size_t i = 0; i < n; ++i) p[i] = 1.5;
  });
  grads_accumulate(mp.arch, acc, g);
  grads_accumulate(mp.arch, acc, g);
  bool all_three = true;
  visit_grad_arrays(mp.arch, acc, [&](const char*, auto* p, size_t n) {
    for (size_t i = 0; i < n; ++i) all_three = all_three && p[i] == 3.0;
  });
  CHECK(all_three);
}

TEST_CASE("forward output is well formed in spiking mode") {
  const auto utt = synth_utterance(51, 0, 5.0);
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 6);
  ModelTape<float> tape;
  const auto out = model_forward(mp, utt.noisy, Activation::Spiking, &tape);

  const int T = tape.features.rows;
  CHECK(out.v.rows == T);
  CHECK(out.v.cols == 2);
  CHECK(out.shat.rows == T);
  CHECK(out.shat.cols == 20);
  for (int t = 0; t < T; ++t)
    CHECK(out.probs.at(t, 0) + out.probs.at(t, 1) == doctest::Approx(1.0).epsilon(1e-9));
  bool binary = true;
  for (float x : out.shat.v) binary = binary && (x == 0.0f || x == 1.0f);
  CHECK(binary);
  out.trace.validate();
  CHECK(out.trace.timesteps == T);
}

TEST_CASE("the clean target is the pre-gate code of the same audio") {
  const auto utt = synth_utterance(52, 0, 0.0);
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 7);
  ModelTape<float> tape;
  model_forward(mp, utt.noisy, Activation::Spiking, &tape);
  const Mat<float> target = encoder_clean_target(mp, utt.noisy, Activation::Spiking);
  REQUIRE(target.same_shape(tape.enc.y));
  CHECK(target.v == tape.enc.y.v);

  // Without the spiking code path the target is the raw feature matrix.
  ModelParams<float> nc = init_params<float>(make_arch("svad", "no_sconv"), 7);
  ModelTape<float> tape2;
  model_forward(nc, utt.noisy, Activation::Spiking, &tape2);
  const Mat<float> target2 = encoder_clean_target(nc, utt.noisy, Activation::Spiking);
  CHECK(target2.v == tape2.features.v);
}

TEST_CASE("loss bookkeeping splits ce and mse with their normalizers") {
  const auto utt = synth_utterance(53, 0, 10.0);
  std::vector<double> wave = widen(utt.noisy);
  wave.resize(1920);
  ModelParams<double> mp = init_params<double>(make_arch("svad"), 8);
  ModelTape<double> tape;
  const auto fwd = model_forward(mp, wave, Activation::Spiking, &tape);
  const int T = fwd.v.rows;
  std::vector<int> labels(utt.labels.begin(), utt.labels.begin() + T);

  const Mat<double> target = encoder_clean_target(mp, wave, Activation::Spiking);
  const LossBreakdown lb =
      model_loss<double>(mp, wave, labels, target, 0.5, Activation::Spiking, nullptr);
  CHECK(lb.frames == T);
  CHECK(lb.elems == static_cast<long>(T) * 20);
  CHECK(lb.ce_sum == ce_loss_sum(fwd.probs, labels));
  CHECK(lb.mean_total(0.5) ==
        doctest::Approx(lb.ce_sum / lb.frames + 0.5 * lb.mse_sum / lb.elems)
            .epsilon(1e-15));

  // Labels of the wrong length are rejected.
  std::vector<int> bad(labels.begin(), labels.end() - 1);
  CHECK_THROWS(model_loss<double>(mp, wave, bad, target, 0.5, Activation::Spiking, nullptr));

  // No gate, no mse term.
  ModelParams<double> bare = init_params<double>(make_arch("svad", "no_sconv_no_attn"), 8);
  const LossBreakdown lb2 = model_loss<double>(bare, wave, labels, Mat<double>(), 0.5,
                                               Activation::Spiking, nullptr);
  CHECK(lb2.elems == 0);
  CHECK(lb2.mean_total(0.5) == lb2.ce_sum / lb2.frames);
}

TEST_CASE("relaxed full-model gradients match finite differences") {
  const auto utt = synth_utterance(54, 0, 0.0);
  std::vector<double> wave = widen(utt.noisy);
  wave.resize(1920);  // 7 frames keeps the probe affordable
  ModelParams<double> mp = init_params<double>(make_arch("svad"), 11);
  std::vector<int> labels(utt.labels.begin(), utt.labels.begin() + 7);
  const double lambda = 0.5;
  const Mat<double> target = encoder_clean_target(mp, wave, Activation::Relaxed);

  ModelGrads<double> g = make_grads(mp);
  model_loss<double>(mp, wave, labels, target, lambda, Activation::Relaxed, &g);

  auto loss_at = [&]() {
    return model_loss<double>(mp, wave, labels, target, lambda, Activation::Relaxed, nullptr)
        .mean_total(lambda);
  };

  // Probe a spread of slots in every parameter array against central
  // differences; the relaxed surrogate is smooth almost everywhere.
  std::vector<std::pair<double*, size_t>> params, grads;
  visit_arrays(mp, [&](const char*, auto* p, size_t n) {
    if constexpr (std::is_same_v<std::remove_pointer_t<decltype(p)>, double>)
      params.emplace_back(p, n);
  });
  visit_grad_arrays(mp.arch, g, [&](const char*, auto* p, size_t n) {
    if constexpr (std::is_same_v<std::remove_pointer_t<decltype(p)>, double>)
      grads.emplace_back(p, n);
  });
  REQUIRE(params.size() == grads.size());

  const double eps = 1e-6;
  int checked = 0;
  for (size_t a = 0; a < params.size(); ++a) {
    REQUIRE(params[a].second == grads[a].second);
    const size_t n = params[a].second;
    const size_t stride = n <= 5 ? 1 : n / 5;
    for (size_t i = 0; i < n; i += stride) {
      double* slot = params[a].first + i;
      const double save = *slot;
      *slot = save + eps;
      const double up = loss_at();
      *slot = save - eps;
      const double dn = loss_at();
      *slot = save;
      const double fd = (up - dn) / (2 * eps);
      CHECK(fd == doctest::Approx(grads[a].first[i]).epsilon(5e-4).scale(1.0));
      ++checked;
    }
  }
  CHECK(checked > 60);
}
