// power.hpp — converts a RunTrace into synaptic-operation and neuron-update
// totals and prices them under a per-op energy model. The estimate is a
// lower bound on dynamic power: analog front-end work is tallied separately
// as MACs and never priced, and static/leakage power is out of scope.
#pragma once

#include <string>
#include <vector>

#include "svad/trace.hpp"

namespace svad {

struct EnergyModel {
  double e_syn = 23.6e-12;  // J per synaptic event
  double e_upd = 81.0e-12;  // J per neuron update
  std::string name = "loihi-default";

  void validate() const;
};

struct OpCounts {
  long synops = 0;
  long updates = 0;
};

// synops = sum over layers of spike_count * fan_out;
// updates = sum over layers flagged is_updated of n_units * timesteps.
OpCounts count_ops(const RunTrace& trace);

struct LayerPower {
  std::string name;
  long spikes = 0;
  long synops = 0;
  long updates = 0;
};

struct PowerReport {
  long synops = 0;
  long updates = 0;
  long dsp_macs = 0;       // analog front-end work, reported, not priced
  double energy_j = 0.0;   // synops * e_syn + updates * e_upd
  double duration_s = 0.0;
  double avg_power_w = 0.0;
  std::vector<LayerPower> layers;
  EnergyModel model;
};

PowerReport estimate_power(const OpCounts& counts, const EnergyModel& model,
                           double duration_s);
PowerReport estimate_power(const RunTrace& trace, const EnergyModel& model);

// Plain-text report. The header states the accounting conventions (gate
// events priced once per surviving spike, readout counted in updates only,
// front-end MACs unpriced) and the lower-bound qualifier.
std::string power_text(const PowerReport& r);

// "layer spikes synops updates" rows plus a totals row, tab separated.
std::string power_delimited(const PowerReport& r);

}  // namespace svad
