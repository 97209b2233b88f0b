#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "svad/corpus.hpp"
#include "svad/model.hpp"
#include "svad/power.hpp"

using namespace svad;

TEST_CASE("op counting prices spikes by fan-out and state by units times steps") {
  RunTrace tr;
  tr.timesteps = 10;
  tr.layers.push_back({"a", 4, 12, 3, true});    // 36 synops, 40 updates
  tr.layers.push_back({"b", 2, 5, 7, false});    // 35 synops, no updates
  tr.layers.push_back({"out", 2, 0, 0, true});   // 20 updates only
  const OpCounts c = count_ops(tr);
  CHECK(c.synops == 36 + 35);
  CHECK(c.updates == 40 + 20);

  RunTrace bad = tr;
  bad.layers[0].spike_count = 41;  // over 4 units * 10 steps
  CHECK_THROWS(count_ops(bad));
}

TEST_CASE("energy is synops and updates priced per op over the duration") {
  EnergyModel em;
  CHECK(em.e_syn == 23.6e-12);
  CHECK(em.e_upd == 81.0e-12);

  OpCounts c;
  c.synops = 1000;
  c.updates = 200;
  const PowerReport r = estimate_power(c, em, 2.0);
  CHECK(r.energy_j == 1000 * 23.6e-12 + 200 * 81.0e-12);
  CHECK(r.avg_power_w == r.energy_j / 2.0);
  CHECK(r.synops == 1000);
  CHECK(r.updates == 200);

  CHECK_THROWS(estimate_power(c, em, 0.0));
  EnergyModel bad;
  bad.e_syn = 0.0;
  CHECK_THROWS(estimate_power(c, bad, 1.0));
}

TEST_CASE("silence drives no synaptic events") {
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 3);
  const std::vector<float> silent(4800, 0.0f);
  const auto out = model_forward(mp, silent);
  const OpCounts c = count_ops(out.trace);
  CHECK(c.synops == 0);
  // Stateful units still pay their per-step update cost.
  CHECK(c.updates == (20 + 3 * 20 + 32 + 2) * out.trace.timesteps);
  CHECK(out.trace.dsp_macs > 0);
}

TEST_CASE("trace rows recount exactly from the recorded activations") {
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 17);
  const auto utt = synth_utterance(31, 0, 0.0);
  ModelTape<float> tape;
  const auto out = model_forward(mp, utt.noisy, Activation::Spiking, &tape);
  const RunTrace& tr = out.trace;
  const int T = tape.features.rows;

  REQUIRE(tr.layers.size() == 8);  // sconv, attn0..2, gate, attended, hidden, readout
  CHECK(tr.timesteps == T);

  CHECK(tr.layers[0].name == "sconv");
  CHECK(tr.layers[0].spike_count == popcount(tape.enc.y));
  CHECK(tr.layers[0].fan_out == 0);  // code path ends in the gate product

  for (int i = 0; i < 3; ++i) {
    CHECK(tr.layers[1 + i].name == "attn" + std::to_string(i));
    CHECK(tr.layers[1 + i].spike_count == popcount(tape.enc.attn[i].o));
    CHECK(tr.layers[1 + i].fan_out == (i == 2 ? 0 : 20));
  }

  const long surviving = popcount(tape.shat);
  CHECK(tr.layers[4].name == "gate");
  CHECK(tr.layers[4].spike_count == surviving);
  CHECK(tr.layers[4].fan_out == 1);
  CHECK(!tr.layers[4].is_updated);
  CHECK(tr.layers[5].name == "attended");
  CHECK(tr.layers[5].spike_count == surviving);
  CHECK(tr.layers[5].fan_out == 32);
  CHECK(!tr.layers[5].is_updated);

  CHECK(tr.layers[6].name == "hidden");
  CHECK(tr.layers[6].spike_count == popcount(tape.hidden.o));
  CHECK(tr.layers[6].fan_out == 32 + 2);

  CHECK(tr.layers[7].name == "readout");
  CHECK(tr.layers[7].spike_count == 0);
  CHECK(tr.layers[7].is_updated);

  const OpCounts c = count_ops(tr);
  long synops = 0;
  synops += popcount(tape.enc.attn[0].o) * 20;
  synops += popcount(tape.enc.attn[1].o) * 20;
  synops += surviving * 1;
  synops += surviving * 32;
  synops += popcount(tape.hidden.o) * 34;
  CHECK(c.synops == synops);
  CHECK(c.updates == static_cast<long>(20 + 60 + 32 + 2) * T);
}

TEST_CASE("ablated encoders move the gate work into the analog bucket") {
  const auto utt = synth_utterance(32, 0, 5.0);

  ModelParams<float> no_conv = init_params<float>(make_arch("svad", "no_sconv"), 4);
  ModelTape<float> tape;
  const auto out = model_forward(no_conv, utt.noisy, Activation::Spiking, &tape);
  // No spiking code path: rows are the mask layers, hidden, readout.
  REQUIRE(out.trace.layers.size() == 5);
  CHECK(out.trace.layers[0].name == "attn0");
  for (const auto& l : out.trace.layers) {
    CHECK(l.name != "gate");
    CHECK(l.name != "attended");
    CHECK(l.name != "sconv");
  }
  const int T = tape.features.rows;
  // Gate products and the analog classifier drive are tallied as MACs.
  ModelParams<float> bare = init_params<float>(make_arch("svad", "no_sconv_no_attn"), 4);
  ModelTape<float> tape2;
  const auto out2 = model_forward(bare, utt.noisy, Activation::Spiking, &tape2);
  REQUIRE(out2.trace.layers.size() == 2);
  CHECK(out2.trace.layers[0].name == "hidden");
  CHECK(out.trace.dsp_macs - out2.trace.dsp_macs ==
        static_cast<long>(T) * 20 * 20 + static_cast<long>(T) * 20);
}

TEST_CASE("the small variant spends less than the full variant on one input") {
  const auto utt = synth_utterance(33, 0, 10.0);
  ModelParams<float> big = init_params<float>(make_arch("svad"), 8);
  ModelParams<float> small = init_params<float>(make_arch("svad-s"), 8);
  const auto ob = model_forward(big, utt.noisy);
  const auto os = model_forward(small, utt.noisy);
  const OpCounts cb = count_ops(ob.trace);
  const OpCounts cs = count_ops(os.trace);
  CHECK(cs.updates < cb.updates);
  CHECK(cs.synops < cb.synops);

  EnergyModel em;
  const PowerReport rb = estimate_power(ob.trace, em);
  const PowerReport rs = estimate_power(os.trace, em);
  CHECK(rs.energy_j < rb.energy_j);
  CHECK(rb.duration_s == doctest::Approx(utt.noisy.size() / 16000.0));
}

TEST_CASE("a three second utterance lands in the microwatt decade") {
  const auto utt = synth_utterance(34, 1, 0.0);
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 12);
  const auto out = model_forward(mp, utt.noisy);
  const PowerReport r = estimate_power(out.trace, EnergyModel{});
  CHECK(r.avg_power_w * 1e6 > 0.1);
  CHECK(r.avg_power_w * 1e6 < 100.0);
}

TEST_CASE("reports state the accounting conventions") {
  RunTrace tr;
  tr.timesteps = 5;
  tr.duration_s = 1.0;
  tr.dsp_macs = 123;
  tr.layers.push_back({"hidden", 4, 7, 6, true});
  const PowerReport r = estimate_power(tr, EnergyModel{});
  const std::string text = power_text(r);
  CHECK(text.find("lower bound") != std::string::npos);
  CHECK(text.find("not priced") != std::string::npos);
  CHECK(text.find("surviving event") != std::string::npos);
  CHECK(text.find("hidden") != std::string::npos);
  CHECK(text.find("123") != std::string::npos);

  const std::string tsv = power_delimited(r);
  CHECK(tsv.find("layer\tspikes\tsynops\tupdates\n") == 0);
  CHECK(tsv.find("hidden\t7\t42\t20\n") != std::string::npos);
  CHECK(tsv.find("total\t-\t42\t20\n") != std::string::npos);
}
