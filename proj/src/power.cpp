#include "svad/power.hpp"

#include <cstdio>

#include "svad/tensor.hpp"

namespace svad {

void EnergyModel::validate() const {
  require(e_syn > 0.0 && e_upd > 0.0, "EnergyModel: energies must be positive");
}

OpCounts count_ops(const RunTrace& trace) {
  trace.validate();
  OpCounts c;
  for (const auto& l : trace.layers) {
    c.synops += l.spike_count * l.fan_out;
    if (l.is_updated) c.updates += static_cast<long>(l.n_units) * trace.timesteps;
  }
  return c;
}

PowerReport estimate_power(const OpCounts& counts, const EnergyModel& model,
                           double duration_s) {
  model.validate();
  require(duration_s > 0.0, "estimate_power: duration must be positive");
  PowerReport r;
  r.synops = counts.synops;
  r.updates = counts.updates;
  r.energy_j = counts.synops * model.e_syn + counts.updates * model.e_upd;
  r.duration_s = duration_s;
  r.avg_power_w = r.energy_j / duration_s;
  r.model = model;
  return r;
}

PowerReport estimate_power(const RunTrace& trace, const EnergyModel& model) {
  PowerReport r = estimate_power(count_ops(trace), model, trace.duration_s);
  r.dsp_macs = trace.dsp_macs;
  for (const auto& l : trace.layers)
    r.layers.push_back({l.name, l.spike_count, l.spike_count * l.fan_out,
                        l.is_updated ? static_cast<long>(l.n_units) * trace.timesteps : 0});
  return r;
}

std::string power_text(const PowerReport& r) {
  std::string out;
  char buf[192];
  out += "# dynamic-power estimate (lower bound)\n";
  out += "# accounting: gate products priced once per surviving event; readout\n";
  out += "# counted in neuron updates only; analog front-end MACs reported, not priced\n";
  std::snprintf(buf, sizeof buf, "energy model     %s (e_syn=%.4g pJ, e_upd=%.4g pJ)\n",
                r.model.name.c_str(), r.model.e_syn * 1e12, r.model.e_upd * 1e12);
  out += buf;
  if (!r.layers.empty()) {
    std::snprintf(buf, sizeof buf, "%-12s %12s %12s %12s\n", "layer", "spikes", "synops",
                  "updates");
    out += buf;
    for (const auto& l : r.layers) {
      std::snprintf(buf, sizeof buf, "%-12s %12ld %12ld %12ld\n", l.name.c_str(), l.spikes,
                    l.synops, l.updates);
      out += buf;
    }
  }
  std::snprintf(buf, sizeof buf, "synops           %ld\n", r.synops);
  out += buf;
  std::snprintf(buf, sizeof buf, "neuron updates   %ld\n", r.updates);
  out += buf;
  std::snprintf(buf, sizeof buf, "front-end MACs   %ld (unpriced)\n", r.dsp_macs);
  out += buf;
  std::snprintf(buf, sizeof buf, "energy           %.6g uJ over %.6g s\n", r.energy_j * 1e6,
                r.duration_s);
  out += buf;
  std::snprintf(buf, sizeof buf, "avg power        %.6g uW (lower bound)\n",
                r.avg_power_w * 1e6);
  out += buf;
  return out;
}

std::string power_delimited(const PowerReport& r) {
  std::string out = "layer\tspikes\tsynops\tupdates\n";
  char buf[160];
  for (const auto& l : r.layers) {
    std::snprintf(buf, sizeof buf, "%s\t%ld\t%ld\t%ld\n", l.name.c_str(), l.spikes, l.synops,
                  l.updates);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "total\t-\t%ld\t%ld\n", r.synops, r.updates);
  out += buf;
  std::snprintf(buf, sizeof buf, "# energy_j\t%.17g\tduration_s\t%.17g\tavg_power_w\t%.17g\n",
                r.energy_j, r.duration_s, r.avg_power_w);
  out += buf;
  return out;
}

}  // namespace svad
