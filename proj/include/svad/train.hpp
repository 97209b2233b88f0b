// train.hpp — the optimization loop: sequential per-utterance gradient
// accumulation over utterance batches (mathematically identical to padded
// batching since the loss normalizers are batch-wide frame counts), global
// norm clipping, Adam, a step learning-rate schedule, and per-epoch
// validation metrics. Single threaded and bitwise deterministic per seed.
#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "svad/adam.hpp"
#include "svad/config.hpp"
#include "svad/corpus.hpp"
#include "svad/metrics.hpp"
#include "svad/model.hpp"

namespace svad {

double lr_at_epoch(double lr0, int epoch, int drop_every, double factor);

// The deterministic train/validation split used by train(): a seed-derived
// permutation with the tail held out. Exposed so downstream evaluation can
// target exactly the utterances training never touched.
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
};
SplitIndices train_val_split(uint64_t seed, size_t n_utts, double val_frac);

struct EpochStats {
  int epoch = 0;  // 1-based in logs
  double lr = 0.0;
  double ce = 0.0;     // frame-weighted mean over the epoch
  double mse = 0.0;    // element-weighted mean over the epoch
  double total = 0.0;  // ce + lambda * mse
  std::optional<double> val_mr, val_far, val_hter;
};

struct TrainResult {
  ModelParams<float> params;       // final
  ModelParams<float> best_params;  // lowest validation HTER (== final without val)
  AdamState opt;
  std::vector<EpochStats> log;
  int best_epoch = 0;
};

// Deterministic split and per-epoch shuffling derived from cfg.seed. When
// out_dir is non-empty, writes metrics.log plus model_final.ckpt and
// model_best.ckpt there. progress, when given, receives one line per epoch.
TrainResult train(const RunConfig& cfg, const std::vector<LabeledUtterance>& data,
                  const std::string& out_dir = "", std::ostream* progress = nullptr);

// Pooled confusion counts of one model over a set of utterances.
std::vector<ConfusionCounts> eval_counts(const ModelParams<float>& params,
                                         const std::vector<LabeledUtterance>& utts);

// Counts grouped into SNR-level rows (plus overall).
std::vector<LevelReport> evaluate(const ModelParams<float>& params,
                                  const std::vector<LabeledUtterance>& utts);

std::string metrics_log_text(const std::vector<EpochStats>& log);

}  // namespace svad
