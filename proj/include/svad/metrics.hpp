// metrics.hpp — frame-level confusion accounting with speech as the positive
// class, and the miss rate / false alarm rate pair whose mean is the half
// total error rate. Rates are kept at full precision; display formatting
// rounds half to even at one decimal.
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace svad {

struct ConfusionCounts {
  long tp = 0, fn = 0, fp = 0, tn = 0;

  long total() const { return tp + fn + fp + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
  }
};

// preds/labels are 0/1 per frame; pad entries (when given) mark frames to
// skip, e.g. alignment padding from batched evaluation.
ConfusionCounts accumulate(const std::vector<int>& preds, const std::vector<int>& labels,
                           const std::vector<uint8_t>* pad = nullptr);

struct MetricsReport {
  std::optional<double> mr;    // fn / (tp + fn), absent without true speech
  std::optional<double> far;   // fp / (fp + tn), absent without true non-speech
  std::optional<double> hter;  // (mr + far) / 2, needs both
  long n_frames = 0;
};

// Throws if the counts contain no frames at all.
MetricsReport hter(const ConfusionCounts& c);

// Display helper: percentage at one decimal, round half to even.
double round1(double percent);
std::string format_rate(const std::optional<double>& rate);  // "19.1" or "-"

struct LevelCounts {
  std::string level;
  ConfusionCounts counts;
};

// Pool counts per SNR level (low/medium/high/unassigned), then rates. The
// returned vector lists levels in fixed order (only those present) followed
// by an "overall" row pooling everything.
struct LevelReport {
  std::string level;
  MetricsReport metrics;
};
std::vector<LevelReport> group_by_level(const std::vector<ConfusionCounts>& per_utt,
                                        const std::vector<double>& snr_dbs);

// Aligned plain-text table and "level mr far hter n_frames" delimited lines
// (tab separated, rates in percent at full precision).
std::string report_text(const std::vector<LevelReport>& rows);
std::string report_delimited(const std::vector<LevelReport>& rows);

}  // namespace svad
