#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "svad/checkpoint.hpp"
#include "svad/config.hpp"
#include "svad/model.hpp"

using namespace svad;

namespace {

std::filesystem::path tmp_dir() {
  auto d = std::filesystem::temp_directory_path() / "svad_unit_ckpt";
  std::filesystem::create_directories(d);
  return d;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<long>(bytes.size()));
}

// The container stores every array as float32, so equality after a round
// trip means equality at that precision; float params compare exactly and
// the double cutoff arrays compare after narrowing.
bool params_equal(ModelParams<float>& a, ModelParams<float>& b) {
  auto ra = detail::param_refs(a);
  auto rb = detail::param_refs(b);
  if (ra.size() != rb.size()) return false;
  for (size_t k = 0; k < ra.size(); ++k) {
    if (ra[k].n != rb[k].n || ra[k].is_double != rb[k].is_double) return false;
    for (size_t i = 0; i < ra[k].n; ++i) {
      const float va = ra[k].is_double
                           ? static_cast<float>(static_cast<double*>(ra[k].p)[i])
                           : static_cast<float*>(ra[k].p)[i];
      const float vb = rb[k].is_double
                           ? static_cast<float>(static_cast<double*>(rb[k].p)[i])
                           : static_cast<float*>(rb[k].p)[i];
      if (va != vb) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoint save then load then save is byte identical") {
  ModelParams<float> mp = init_params<float>(make_arch("svad"), 21);
  const auto p1 = (tmp_dir() / "a.ckpt").string();
  const auto p2 = (tmp_dir() / "b.ckpt").string();
  save_checkpoint(p1, mp);

  ModelParams<float> back = load_checkpoint(p1);
  CHECK(back.arch.variant == "svad");
  CHECK(back.arch.attn_layers == 3);
  CHECK(params_equal(mp, back));

  save_checkpoint(p2, back);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("checkpoints carry every variant and ablation") {
  for (const char* variant : {"svad", "svad-s"}) {
    for (const char* ablation : {"none", "no_sconv", "no_sconv_no_attn"}) {
      ModelParams<float> mp = init_params<float>(make_arch(variant, ablation), 5);
      const auto p = (tmp_dir() / "v.ckpt").string();
      save_checkpoint(p, mp);
      ModelParams<float> back = load_checkpoint(p);
      CHECK(back.arch.variant == variant);
      CHECK(back.arch.use_sconv == mp.arch.use_sconv);
      CHECK(back.arch.attn_layers == mp.arch.attn_layers);
      CHECK(param_count(back) == param_count(mp));
      CHECK(params_equal(mp, back));
    }
  }
}

TEST_CASE("optimizer state rides along and restores exactly") {
  ModelParams<float> mp = init_params<float>(make_arch("svad-s"), 9);
  ModelGrads<float> g = make_grads(mp);
  visit_grad_arrays(mp.arch, g, [&](const char*, auto* p, size_t n) {
    for (size_t i = 0; i < n; ++i) p[i] = 0.01 * (static_cast<double>(i % 7) - 3.0);
  });
  TrainState ts;
  ts.present = true;
  ts.epoch = 4;
  adam_step(ts.opt, mp, g, 0.001);
  adam_step(ts.opt, mp, g, 0.001);

  const auto p = (tmp_dir() / "opt.ckpt").string();
  save_checkpoint(p, mp, &ts);

  TrainState back_ts;
  ModelParams<float> back = load_checkpoint(p, &back_ts);
  CHECK(params_equal(mp, back));
  REQUIRE(back_ts.present);
  CHECK(back_ts.epoch == 4);
  CHECK(back_ts.opt.t == 2);
  REQUIRE(back_ts.opt.m.size() == ts.opt.m.size());
  bool moments_match = true;
  for (size_t a = 0; a < ts.opt.m.size(); ++a)
    for (size_t i = 0; i < ts.opt.m[a].size(); ++i) {
      // Moments also pass through the container's float32 payload.
      moments_match = moments_match &&
                      static_cast<float>(back_ts.opt.m[a][i]) ==
                          static_cast<float>(ts.opt.m[a][i]) &&
                      static_cast<float>(back_ts.opt.v[a][i]) ==
                          static_cast<float>(ts.opt.v[a][i]);
    }
  CHECK(moments_match);

  // Loading without asking for training state still works.
  ModelParams<float> plain = load_checkpoint(p);
  CHECK(params_equal(mp, plain));

  // A parameter-only checkpoint reports no training state.
  const auto p2 = (tmp_dir() / "noopt.ckpt").string();
  save_checkpoint(p2, mp);
  TrainState empty_ts;
  load_checkpoint(p2, &empty_ts);
  CHECK(!empty_ts.present);
}

TEST_CASE("corrupt checkpoints are rejected with reasons") {
  ModelParams<float> mp = init_params<float>(make_arch("svad-s"), 2);
  const auto p = (tmp_dir() / "c.ckpt").string();
  save_checkpoint(p, mp);
  const std::string bytes = slurp(p);

  const auto bad = (tmp_dir() / "bad.ckpt").string();

  spit(bad, "");
  CHECK_THROWS(load_checkpoint(bad));

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  spit(bad, wrong_magic);
  CHECK_THROWS(load_checkpoint(bad));

  std::string wrong_version = bytes;
  wrong_version[8] = 99;
  spit(bad, wrong_version);
  CHECK_THROWS(load_checkpoint(bad));

  spit(bad, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS(load_checkpoint(bad));

  std::string trailing = bytes + "junk";
  spit(bad, trailing);
  CHECK_THROWS(load_checkpoint(bad));

  CHECK_THROWS(load_checkpoint((tmp_dir() / "absent.ckpt").string()));
}

TEST_CASE("config defaults match the documented recipe") {
  const RunConfig c = parse_config_text("");
  CHECK(c.variant == "svad");
  CHECK(c.ablation == "none");
  CHECK(c.n_filters == 20);
  CHECK(c.kernel_len == 101);
  CHECK(c.conv_kernel == 3);
  CHECK(c.alpha == 0.5);
  CHECK(c.theta == 0.3);
  CHECK(c.surrogate_a == 4.0);
  CHECK(c.lambda == 1.0);
  CHECK(c.lr0 == 0.001);
  CHECK(c.lr_drop_every == 40);
  CHECK(c.lr_drop_factor == 0.1);
  CHECK(c.epochs == 100);
  CHECK(c.batch_size == 128);
  CHECK(c.grad_clip == 5.0);
  CHECK(c.seed == 1);
  CHECK(c.val_frac == 0.1);
  CHECK(c.e_syn_pj == 23.6);
  CHECK(c.e_upd_pj == 81.0);
}

TEST_CASE("config text round trips through parse and render") {
  RunConfig c;
  c.variant = "svad-s";
  c.ablation = "no_sconv";
  c.lambda = 0.25;
  c.epochs = 7;
  c.seed = 123456789;
  const RunConfig back = parse_config_text(config_text(c));
  CHECK(back.variant == c.variant);
  CHECK(back.ablation == c.ablation);
  CHECK(back.lambda == c.lambda);
  CHECK(back.epochs == c.epochs);
  CHECK(back.seed == c.seed);
  CHECK(config_text(back) == config_text(c));
}

TEST_CASE("config parsing handles comments, spacing, and errors by line") {
  const RunConfig c = parse_config_text(
      "# run recipe\n"
      "variant = svad-s\n"
      "\n"
      "  epochs=3   # short smoke run\n"
      "lambda = 0.5\n");
  CHECK(c.variant == "svad-s");
  CHECK(c.epochs == 3);
  CHECK(c.lambda == 0.5);

  // Unknown keys and malformed lines carry their line number.
  try {
    parse_config_text("variant = svad\nlr = 0.1\n");
    CHECK(false);
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("lr") != std::string::npos);
  }
  try {
    parse_config_text("epochs 3\n");
    CHECK(false);
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS(parse_config_text("epochs = -2\n"));
  CHECK_THROWS(parse_config_text("variant = vgg\n"));
  CHECK_THROWS(parse_config_text("val_frac = 1.5\n"));
}

TEST_CASE("config files load from disk") {
  const auto p = (tmp_dir() / "run.cfg").string();
  spit(p, "variant = svad\nepochs = 2\nbatch_size = 4\n");
  const RunConfig c = parse_config_file(p);
  CHECK(c.epochs == 2);
  CHECK(c.batch_size == 4);
  CHECK_THROWS(parse_config_file((tmp_dir() / "nope.cfg").string()));
}
