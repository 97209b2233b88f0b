#include "svad/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "svad/checkpoint.hpp"
#include "svad/classifier.hpp"

namespace svad {

double lr_at_epoch(double lr0, int epoch, int drop_every, double factor) {
  require(epoch >= 0 && drop_every >= 1, "lr_at_epoch: bad arguments");
  return lr0 * std::pow(factor, static_cast<double>(epoch / drop_every));
}

namespace {

// Fisher-Yates with raw generator words; std::shuffle's draw sequence is
// implementation defined and would break cross-library reproducibility.
void shuffle_indices(std::vector<int>& idx, std::mt19937_64& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

std::vector<int> predictions(const ModelParams<float>& params,
                             const std::vector<float>& wave) {
  const ForwardOut<float> out = model_forward(params, wave);
  std::vector<int> preds;
  preds.reserve(out.probs.rows);
  for (const FrameDecision& d : decide(out.probs)) preds.push_back(d.label);
  return preds;
}

}  // namespace

SplitIndices train_val_split(uint64_t seed, size_t n_utts, double val_frac) {
  require(n_utts >= 1, "train_val_split: empty corpus");
  require(val_frac >= 0.0 && val_frac < 1.0, "train_val_split: bad val_frac");
  std::vector<int> order(n_utts);
  for (size_t i = 0; i < n_utts; ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 split_rng(seed ^ 0x51B2A3C4D5E6F708ULL);
  shuffle_indices(order, split_rng);
  int n_val = static_cast<int>(std::lround(val_frac * static_cast<double>(n_utts)));
  if (val_frac > 0.0 && n_val == 0 && n_utts > 1) n_val = 1;
  require(n_val < static_cast<int>(n_utts), "train_val_split: no training data left");
  SplitIndices s;
  s.train.assign(order.begin(), order.end() - n_val);
  s.val.assign(order.end() - n_val, order.end());
  return s;
}

std::vector<ConfusionCounts> eval_counts(const ModelParams<float>& params,
                                         const std::vector<LabeledUtterance>& utts) {
  std::vector<ConfusionCounts> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(accumulate(predictions(params, u.noisy), u.labels));
  return out;
}

std::vector<LevelReport> evaluate(const ModelParams<float>& params,
                                  const std::vector<LabeledUtterance>& utts) {
  std::vector<double> snrs;
  snrs.reserve(utts.size());
  for (const auto& u : utts) snrs.push_back(u.snr_db);
  return group_by_level(eval_counts(params, utts), snrs);
}

std::string metrics_log_text(const std::vector<EpochStats>& log) {
  std::string s = "epoch\tlr\tce\tmse\ttotal\tval_mr\tval_far\tval_hter\n";
  char buf[256];
  for (const auto& e : log) {
    auto opt = [](const std::optional<double>& v) -> std::string {
      if (!v) return "-";
      char b[40];
      std::snprintf(b, sizeof b, "%.10g", *v);
      return b;
    };
    std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\t%.10g\t%.10g\t%s\t%s\t%s\n", e.epoch,
                  e.lr, e.ce, e.mse, e.total, opt(e.val_mr).c_str(), opt(e.val_far).c_str(),
                  opt(e.val_hter).c_str());
    s += buf;
  }
  return s;
}

TrainResult train(const RunConfig& cfg, const std::vector<LabeledUtterance>& data,
                  const std::string& out_dir, std::ostream* progress) {
  cfg.validate();
  require(!data.empty(), "train: no utterances");
  const ArchDescriptor arch = cfg.to_arch();

  const SplitIndices split = train_val_split(cfg.seed, data.size(), cfg.val_frac);
  std::vector<int> train_idx = split.train;
  const std::vector<int>& val_idx = split.val;

  TrainResult res;
  res.params = init_params<float>(arch, cfg.seed);
  std::mt19937_64 epoch_rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 1);

  double best_hter = 2.0;
  res.best_params = res.params;
  res.best_epoch = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg.lr0, epoch, cfg.lr_drop_every, cfg.lr_drop_factor);
    shuffle_indices(train_idx, epoch_rng);

    double epoch_ce = 0.0, epoch_mse = 0.0;
    long epoch_frames = 0, epoch_elems = 0;

    for (size_t b0 = 0; b0 < train_idx.size(); b0 += cfg.batch_size) {
      const size_t b1 = std::min(b0 + cfg.batch_size, train_idx.size());
      long batch_frames = 0;
      for (size_t k = b0; k < b1; ++k)
        batch_frames += frame_count(static_cast<int>(data[train_idx[k]].noisy.size()),
                                    arch.frames);
      const long batch_elems = batch_frames * arch.n_filters;
      const double inv_ce = 1.0 / static_cast<double>(batch_frames);
      const double inv_mse =
          arch.attn_layers > 0 ? 1.0 / static_cast<double>(batch_elems) : 0.0;

      ModelGrads<float> acc = make_grads(res.params);
      for (size_t k = b0; k < b1; ++k) {
        const LabeledUtterance& u = data[train_idx[k]];
        Mat<float> target;
        if (arch.attn_layers > 0) target = encoder_clean_target(res.params, u.clean);
        ModelGrads<float> g;
        const LossBreakdown lb = model_loss(res.params, u.noisy, u.labels, target,
                                            cfg.lambda, Activation::Spiking, &g, inv_ce,
                                            inv_mse);
        grads_accumulate(arch, acc, g);
        epoch_ce += lb.ce_sum;
        epoch_mse += lb.mse_sum;
        epoch_frames += lb.frames;
        epoch_elems += lb.elems;
      }
      clip_global_norm(arch, acc, cfg.grad_clip);
      adam_step(res.opt, res.params, acc, lr);
    }

    EpochStats st;
    st.epoch = epoch + 1;
    st.lr = lr;
    st.ce = epoch_frames > 0 ? epoch_ce / static_cast<double>(epoch_frames) : 0.0;
    st.mse = epoch_elems > 0 ? epoch_mse / static_cast<double>(epoch_elems) : 0.0;
    st.total = st.ce + cfg.lambda * st.mse;
    require(std::isfinite(st.total), "train: loss diverged at epoch " +
                                         std::to_string(st.epoch));

    if (!val_idx.empty()) {
      ConfusionCounts pooled;
      for (int vi : val_idx)
        pooled += accumulate(predictions(res.params, data[vi].noisy), data[vi].labels);
      const MetricsReport r = hter(pooled);
      st.val_mr = r.mr;
      st.val_far = r.far;
      st.val_hter = r.hter;
      if (r.hter && *r.hter < best_hter) {
        best_hter = *r.hter;
        res.best_params = res.params;
        res.best_epoch = st.epoch;
      }
    }
    res.log.push_back(st);
    if (progress) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "epoch %3d  lr %.2e  ce %.5f  mse %.5f  total %.5f  val_hter %s\n",
                    st.epoch, st.lr, st.ce, st.mse, st.total,
                    st.val_hter ? format_rate(st.val_hter).c_str() : "-");
      (*progress) << line << std::flush;
    }
  }
  if (val_idx.empty()) {
    res.best_params = res.params;
    res.best_epoch = cfg.epochs;
  }

  if (!out_dir.empty()) {
    {
      const std::string tmp = out_dir + "/metrics.log.tmp";
      std::ofstream f(tmp, std::ios::trunc);
      require(static_cast<bool>(f), "train: cannot write " + tmp);
      f << metrics_log_text(res.log);
      f.close();
      require(std::rename(tmp.c_str(), (out_dir + "/metrics.log").c_str()) == 0,
              "train: rename failed for metrics.log");
    }
    TrainState ts;
    ts.present = true;
    ts.epoch = cfg.epochs;
    ts.opt = res.opt;
    save_checkpoint(out_dir + "/model_final.ckpt", res.params, &ts);
    save_checkpoint(out_dir + "/model_best.ckpt", res.best_params, nullptr);
  }
  return res;
}

}  // namespace svad
