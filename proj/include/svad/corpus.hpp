// corpus.hpp — SNR-controlled mixing, frame labeling, and a deterministic
// synthetic corpus: alternating silence and harmonic "voiced" segments mixed
// with one of four noise kinds at a commanded SNR. Stands in for a large
// recorded corpus while keeping the repo self-contained; real data can be
// ingested through the same manifest/mask file formats.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svad/frames.hpp"

namespace svad {

struct LabeledUtterance {
  std::vector<float> noisy;
  std::vector<float> clean;
  std::vector<int> labels;                        // per frame, 1 = speech
  std::vector<std::pair<long, long>> mask;        // speech spans [start, end)
  double snr_db = 0.0;
  std::string noise_kind;
};

double rms(const std::vector<float>& x);

// Mix: clean + g * noise with g chosen so the clean-to-added-noise power
// ratio equals snr_db. Noise longer than clean is cropped; shorter is an
// error, as is zero energy on either side.
std::vector<float> mix_at_snr(const std::vector<float>& clean,
                              const std::vector<float>& noise, double snr_db);

// Frame label = 1 iff at least half the frame's samples are speech.
std::vector<int> make_labels(const std::vector<uint8_t>& speech_mask,
                             const FrameSpec& spec = FrameSpec{});

std::vector<uint8_t> mask_to_samples(const std::vector<std::pair<long, long>>& spans,
                                     long n_samples);

// SNR levels named after noise severity: low noise = high SNR.
extern const std::vector<double> kLowSnrs;     // {+15, +10}
extern const std::vector<double> kMediumSnrs;  // {+5, 0}
extern const std::vector<double> kHighSnrs;    // {-5, -10}

// "low,med,high" (med/medium both accepted) -> concatenated SNR list.
std::vector<double> parse_levels(const std::string& csv);

// Bucket name for an utterance SNR: low, medium, high, or unassigned.
std::string level_of(double snr_db);

LabeledUtterance synth_utterance(uint64_t seed, long index, double snr_db,
                                 const FrameSpec& spec = FrameSpec{});

// Utterance i draws snr_levels[i % size]; everything else comes from a
// per-utterance stream seeded by (seed, i), so corpora are stable under
// regeneration and independent of generation order.
std::vector<LabeledUtterance> synth_corpus(int n_utts,
                                           const std::vector<double>& snr_levels,
                                           uint64_t seed,
                                           const FrameSpec& spec = FrameSpec{});

struct ManifestEntry {
  std::string noisy;  // paths relative to the manifest directory
  std::string clean;
  std::string mask;
  double snr_db = 0.0;
  std::string noise_kind;
};

// Directory layout: utt_%05d_{noisy,clean}.wav, utt_%05d_mask.txt, and
// manifest.txt with one "noisy clean mask snr_db noise_kind" line each.
void save_corpus(const std::string& dir, const std::vector<LabeledUtterance>& utts);
std::vector<ManifestEntry> read_manifest(const std::string& path);
LabeledUtterance load_utterance(const std::string& dir, const ManifestEntry& e,
                                const FrameSpec& spec = FrameSpec{});
std::vector<LabeledUtterance> load_corpus(const std::string& dir,
                                          const FrameSpec& spec = FrameSpec{});

void write_mask_file(const std::string& path,
                     const std::vector<std::pair<long, long>>& spans);
std::vector<std::pair<long, long>> read_mask_file(const std::string& path);

}  // namespace svad
