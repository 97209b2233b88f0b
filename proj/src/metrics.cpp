#include "svad/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "svad/corpus.hpp"
#include "svad/tensor.hpp"

namespace svad {

ConfusionCounts accumulate(const std::vector<int>& preds, const std::vector<int>& labels,
                           const std::vector<uint8_t>* pad) {
  require_eq(preds.size(), labels.size(), "accumulate: length mismatch");
  if (pad) require_eq(pad->size(), labels.size(), "accumulate: pad length mismatch");
  ConfusionCounts c;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (pad && (*pad)[i]) continue;
    require(preds[i] == 0 || preds[i] == 1, "accumulate: prediction not binary");
    require(labels[i] == 0 || labels[i] == 1, "accumulate: label not binary");
    if (labels[i] == 1)
      preds[i] == 1 ? ++c.tp : ++c.fn;
    else
      preds[i] == 1 ? ++c.fp : ++c.tn;
  }
  return c;
}

MetricsReport hter(const ConfusionCounts& c) {
  require(c.tp >= 0 && c.fn >= 0 && c.fp >= 0 && c.tn >= 0, "hter: negative counts");
  require(c.total() > 0, "hter: no frames counted");
  MetricsReport r;
  r.n_frames = c.total();
  if (c.tp + c.fn > 0) r.mr = static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
  if (c.fp + c.tn > 0) r.far = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  if (r.mr && r.far) r.hter = (*r.mr + *r.far) / 2.0;
  return r;
}

double round1(double percent) {
  // Correctly rounded decimal conversion: ties (values whose exact decimal
  // expansion ends in ...5 at the second place) go to the even digit, and no
  // intermediate arithmetic can manufacture a tie that the value does not
  // actually sit on. Scaling by 10 and rounding would: it double-rounds
  // values just below a .x5 midpoint up onto it.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", percent);
  return std::strtod(buf, nullptr);
}

std::string format_rate(const std::optional<double>& rate) {
  if (!rate) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", round1(*rate * 100.0));
  return buf;
}

std::vector<LevelReport> group_by_level(const std::vector<ConfusionCounts>& per_utt,
                                        const std::vector<double>& snr_dbs) {
  require_eq(per_utt.size(), snr_dbs.size(), "group_by_level: length mismatch");
  ConfusionCounts low, medium, high, unassigned, overall;
  bool saw_unassigned = false;
  for (size_t i = 0; i < per_utt.size(); ++i) {
    const std::string lv = level_of(snr_dbs[i]);
    if (lv == "low") low += per_utt[i];
    else if (lv == "medium") medium += per_utt[i];
    else if (lv == "high") high += per_utt[i];
    else {
      unassigned += per_utt[i];
      saw_unassigned = true;
    }
    overall += per_utt[i];
  }
  std::vector<LevelReport> rows;
  auto push = [&](const std::string& name, const ConfusionCounts& c) {
    if (c.total() > 0) rows.push_back({name, hter(c)});
  };
  push("low", low);
  push("medium", medium);
  push("high", high);
  if (saw_unassigned) push("unassigned", unassigned);
  push("overall", overall);
  return rows;
}

std::string report_text(const std::vector<LevelReport>& rows) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s %10s\n", "level", "MR%", "FAR%",
                "HTER%", "frames");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s %10ld\n", r.level.c_str(),
                  format_rate(r.metrics.mr).c_str(), format_rate(r.metrics.far).c_str(),
                  format_rate(r.metrics.hter).c_str(), r.metrics.n_frames);
    out += buf;
  }
  return out;
}

std::string report_delimited(const std::vector<LevelReport>& rows) {
  std::string out = "level\tmr\tfar\thter\tn_frames\n";
  char buf[160];
  for (const auto& r : rows) {
    auto full = [](const std::optional<double>& v) -> std::string {
      if (!v) return "-";
      char b[40];
      std::snprintf(b, sizeof b, "%.17g", *v * 100.0);
      return b;
    };
    std::snprintf(buf, sizeof buf, "%s\t%s\t%s\t%s\t%ld\n", r.level.c_str(),
                  full(r.metrics.mr).c_str(), full(r.metrics.far).c_str(),
                  full(r.metrics.hter).c_str(), r.metrics.n_frames);
    out += buf;
  }
  return out;
}

}  // namespace svad
