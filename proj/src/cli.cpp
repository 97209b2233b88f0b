#include "svad/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "svad/checkpoint.hpp"
#include "svad/classifier.hpp"
#include "svad/config.hpp"
#include "svad/corpus.hpp"
#include "svad/gradcheck.hpp"
#include "svad/power.hpp"
#include "svad/train.hpp"
#include "svad/wav.hpp"

namespace svad {

namespace {

void write_text_atomic(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
  f << body;
  f.close();
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

RunConfig load_config_opt(const std::string& path) {
  return path.empty() ? RunConfig{} : parse_config_file(path);
}

int cmd_gen_data(const std::string& out, int n, uint64_t seed, const std::string& levels) {
  std::filesystem::create_directories(out);
  const auto snrs = parse_levels(levels);
  const auto utts = synth_corpus(n, snrs, seed);
  save_corpus(out, utts);
  long frames = 0, speech = 0;
  for (const auto& u : utts) {
    frames += static_cast<long>(u.labels.size());
    for (int l : u.labels) speech += l;
  }
  std::printf("wrote %d utterances to %s (%ld frames, %.1f%% speech)\n", n, out.c_str(),
              frames, 100.0 * static_cast<double>(speech) / static_cast<double>(frames));
  return 0;
}

int cmd_train(const std::string& config, const std::string& data, const std::string& out) {
  const RunConfig cfg = load_config_opt(config);
  std::filesystem::create_directories(out);
  const auto corpus = load_corpus(data, cfg.to_arch().frames);
  const TrainResult res = train(cfg, corpus, out, &std::cout);
  std::printf("final checkpoint: %s/model_final.ckpt (best epoch %d)\n", out.c_str(),
              res.best_epoch);
  return 0;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& out) {
  ModelParams<float> params = load_checkpoint(model);
  const auto corpus = load_corpus(data, params.arch.frames);
  const auto rows = evaluate(params, corpus);
  std::fputs(report_text(rows).c_str(), stdout);
  if (!out.empty()) write_text_atomic(out, report_delimited(rows));
  return 0;
}

int cmd_infer(const std::string& model, const std::string& wav, const std::string& out) {
  ModelParams<float> params = load_checkpoint(model);
  const Waveform w = read_wav(wav);
  const ForwardOut<float> fwd = model_forward(params, w.samples);
  const double hop_ms = 1000.0 * params.arch.frames.hop / params.arch.fs;
  const double frame_ms = 1000.0 * params.arch.frames.win / params.arch.fs;
  std::string body;
  char line[96];
  long speech = 0;
  for (const FrameDecision& d : decide(fwd.probs, frame_ms, hop_ms)) {
    std::snprintf(line, sizeof line, "%d, %.1f, %.6f, %d\n", d.frame_index, d.t_ms,
                  d.p_speech, d.label);
    body += line;
    speech += d.label;
  }
  write_text_atomic(out, body);
  std::printf("%d frames, %ld speech -> %s\n", fwd.probs.rows, speech, out.c_str());
  return 0;
}

int cmd_power(const std::string& model, const std::string& wav, const std::string& config,
              const std::string& out) {
  const RunConfig cfg = load_config_opt(config);
  ModelParams<float> params = load_checkpoint(model);
  const Waveform w = read_wav(wav);
  const ForwardOut<float> fwd = model_forward(params, w.samples);
  const PowerReport rep = estimate_power(fwd.trace, cfg.to_energy());
  std::fputs(power_text(rep).c_str(), stdout);
  if (!out.empty()) write_text_atomic(out, power_delimited(rep));
  return 0;
}

int cmd_ablate(const std::string& config, const std::string& data) {
  const RunConfig base = load_config_opt(config);
  const auto corpus = load_corpus(data, base.to_arch().frames);
  require(base.val_frac > 0.0, "ablate: needs val_frac > 0 for held-out evaluation");

  struct Row {
    std::string name;
    std::vector<LevelReport> rows;
  };
  std::vector<Row> table;
  for (const std::string ab : {"none", "no_sconv", "no_sconv_no_attn"}) {
    RunConfig cfg = base;
    cfg.ablation = ab;
    std::printf("== ablation %s (%ld params) ==\n", ab.c_str(),
                param_count(cfg.to_arch()));
    const TrainResult res = train(cfg, corpus, "", &std::cout);

    // Score the best checkpoint on the utterances training held out.
    const SplitIndices split = train_val_split(cfg.seed, corpus.size(), cfg.val_frac);
    std::vector<LabeledUtterance> held;
    for (int vi : split.val) held.push_back(corpus[vi]);
    table.push_back({ab, evaluate(res.best_params, held)});
  }
  for (const auto& row : table) {
    std::printf("\n-- %s --\n", row.name.c_str());
    std::fputs(report_text(row.rows).c_str(), stdout);
  }
  return 0;
}

int cmd_gradcheck(uint64_t seed, int trials) {
  const GradcheckReport r = run_gradcheck(seed, trials);
  std::printf("gradcheck: %d trials, %ld comparisons, %d resamples, max rel err %.3e\n",
              r.trials, r.n_checked, r.resamples, r.max_rel_err);
  if (!r.passed()) {
    std::fprintf(stderr, "gradcheck failed: max relative error %.3e >= 1e-4\n",
                 r.max_rel_err);
    return 1;
  }
  return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"spiking voice activity detection toolkit"};
  app.require_subcommand(1);

  std::string out, data, config, model, wav, levels = "low,med,high";
  int n = 0, trials = 100;
  uint64_t seed = 1;

  auto* gen = app.add_subcommand("gen-data", "synthesize a labeled corpus");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--n", n, "number of utterances")->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "corpus seed");
  gen->add_option("--levels", levels, "comma list of low,med,high");

  auto* tr = app.add_subcommand("train", "train a model on a corpus directory");
  tr->add_option("--config", config, "run configuration file")->check(CLI::ExistingFile);
  tr->add_option("--data", data, "corpus directory")->required()
      ->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "artifact output directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  ev->add_option("--model", model, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "corpus directory")->required()
      ->check(CLI::ExistingDirectory);
  ev->add_option("--out", out, "also write a delimited report here");

  auto* in = app.add_subcommand("infer", "per-frame decisions for one WAV");
  in->add_option("--model", model, "checkpoint file")->required()->check(CLI::ExistingFile);
  in->add_option("--wav", wav, "input waveform")->required()->check(CLI::ExistingFile);
  in->add_option("--out", out, "decision file")->required();

  auto* pw = app.add_subcommand("power", "energy estimate for one WAV");
  pw->add_option("--model", model, "checkpoint file")->required()->check(CLI::ExistingFile);
  pw->add_option("--wav", wav, "input waveform")->required()->check(CLI::ExistingFile);
  pw->add_option("--config", config, "run configuration file")->check(CLI::ExistingFile);
  pw->add_option("--out", out, "also write a delimited report here");

  auto* ab = app.add_subcommand("ablate", "train and compare the ablation grid");
  ab->add_option("--config", config, "run configuration file")->check(CLI::ExistingFile);
  ab->add_option("--data", data, "corpus directory")->required()
      ->check(CLI::ExistingDirectory);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gc->add_option("--seed", seed, "suite seed");
  gc->add_option("--trials", trials, "number of verified trials")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit cleanly; usage errors are 2
  }

  try {
    if (gen->parsed()) return cmd_gen_data(out, n, seed, levels);
    if (tr->parsed()) return cmd_train(config, data, out);
    if (ev->parsed()) return cmd_eval(model, data, out);
    if (in->parsed()) return cmd_infer(model, wav, out);
    if (pw->parsed()) return cmd_power(model, wav, config, out);
    if (ab->parsed()) return cmd_ablate(config, data);
    if (gc->parsed()) return cmd_gradcheck(seed, trials);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace svad
