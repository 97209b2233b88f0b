// trace.hpp — per-run activity accounting consumed by the power estimator.
// A trace row records how many spikes a layer emitted, how many downstream
// synapses each spike drives, and whether the layer's units are stateful
// (stateful units cost one neuron update per timestep).
#pragma once

#include <string>
#include <vector>

#include "svad/tensor.hpp"

namespace svad {

struct TraceEntry {
  std::string name;
  int n_units = 0;        // units in this row (capacity bound for spikes)
  long spike_count = 0;   // spikes emitted over the whole run
  int fan_out = 0;        // downstream synapses per spiking unit
  bool is_updated = true; // counts n_units * T neuron updates when true
};

struct RunTrace {
  std::vector<TraceEntry> layers;
  int timesteps = 0;
  double duration_s = 0.0;  // audio duration; 0 when not derived from audio
  long dsp_macs = 0;        // analog front-end multiply-accumulates, reported
                            // separately from the event-driven tallies

  void validate() const {
    require(timesteps >= 0, "RunTrace: negative timestep count");
    for (const auto& e : layers) {
      require(e.spike_count >= 0 && e.fan_out >= 0 && e.n_units >= 0,
              "RunTrace: negative count");
      if (e.spike_count > static_cast<long>(e.n_units) * timesteps)
        throw std::invalid_argument("RunTrace: spike count for '" + e.name +
                                    "' exceeds n_units * T");
    }
  }
};

}  // namespace svad
