// config.hpp — flat `key = value` run configuration with `#` comments.
// Defaults match the documented training recipe; unknown keys are rejected
// so typos fail loudly instead of silently training the wrong model.
#pragma once

#include <cstdint>
#include <string>

#include "svad/model.hpp"
#include "svad/power.hpp"

namespace svad {

struct RunConfig {
  std::string variant = "svad";    // svad | svad-s
  std::string ablation = "none";   // none | no_sconv | no_sconv_no_attn
  int n_filters = 20;
  int kernel_len = 101;
  int conv_kernel = 3;
  double fs = 16000.0;
  int frame = 480;
  int hop = 240;
  double alpha = 0.5;
  double theta = 0.3;
  double surrogate_a = 4.0;
  double lambda = 1.0;             // weight of the attention regularizer
  double lr0 = 0.001;
  int lr_drop_every = 40;          // epochs between tenfold lr drops
  double lr_drop_factor = 0.1;
  int epochs = 100;
  int batch_size = 128;            // utterances per optimizer step
  double grad_clip = 5.0;          // global-norm ceiling, 0 disables
  uint64_t seed = 1;
  double val_frac = 0.1;           // held-out fraction for epoch metrics
  double e_syn_pj = 23.6;
  double e_upd_pj = 81.0;

  void validate() const;
  ArchDescriptor to_arch() const;
  EnergyModel to_energy() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Render every key; parse_config_text(config_text(c)) == c.
std::string config_text(const RunConfig& c);

}  // namespace svad
