// Acceptance gate. Each criterion prints detail lines and one final
// PASS/FAIL verdict; the process exits nonzero if any selected criterion
// fails. Run with no arguments for the full gate, with a criterion number
// for one entry, or with "6 w_mlp|w_msa|video" for a single training run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <swincap/checkpoint.hpp>
#include <swincap/config.hpp>
#include <swincap/corpus.hpp>
#include <swincap/cost.hpp>
#include <swincap/decoder.hpp>
#include <swincap/encoder.hpp>
#include <swincap/metrics.hpp>
#include <swincap/mixers.hpp>
#include <swincap/patching.hpp>
#include <swincap/rng.hpp>
#include <swincap/tensor.hpp>
#include <swincap/trainer.hpp>
#include <swincap/vocab.hpp>

namespace fs = std::filesystem;
using namespace swincap;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string scratch_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / "swincap_accept" / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// criterion 1: gradients

struct GradReport {
  i64 tensors = 0;
  i64 probes = 0;
  i64 failures = 0;
  double worst_rel = 0.0;  // among probes judged by the relative bound
  std::string worst_at;
};

// Central differences against the recorded gradient, h = 1e-5. A probe
// passes on relative error < 1e-5 or, for gradients drowned in the
// finite-difference noise floor, absolute gap < 1e-9.
void check_grads(std::vector<std::pair<std::string, TensorD>>& named,
                 const std::function<TensorD()>& build_loss, i64 max_probe, GradReport& rep) {
  const double h = 1e-5, tol = 1e-5, abs_tol = 1e-9;
  for (auto& [name, p] : named) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  auto loss = build_loss();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(named.size());
  for (auto& [name, p] : named) analytic.push_back(p.grad());

  for (size_t pi = 0; pi < named.size(); ++pi) {
    auto& [name, p] = named[pi];
    ++rep.tensors;
    const i64 n = p.numel();
    std::vector<i64> probes;
    if (n <= max_probe) {
      for (i64 i = 0; i < n; ++i) probes.push_back(i);
    } else {
      SplitMix64 rng(0x9e3779b9u + static_cast<u64>(pi));
      for (i64 j = 0; j < max_probe; ++j)
        probes.push_back(static_cast<i64>(rng.next_below(static_cast<u64>(n))));
    }
    for (i64 at : probes) {
      double* d = p.mutable_data();
      const double keep = d[at];
      double up, dn;
      {
        NoGradGuard ng;
        d[at] = keep + h;
        up = build_loss().item();
        d[at] = keep - h;
        dn = build_loss().item();
        d[at] = keep;
      }
      const double fd = (up - dn) / (2.0 * h);
      const double an = analytic[pi][static_cast<size_t>(at)];
      const double gap = std::abs(an - fd);
      const double rel = gap / (std::abs(an) + std::abs(fd) + 1e-8);
      ++rep.probes;
      if (gap > abs_tol && rel > rep.worst_rel) {
        rep.worst_rel = rel;
        rep.worst_at = name + "[" + std::to_string(at) + "]";
      }
      if (rel > tol && gap > abs_tol) {
        ++rep.failures;
        std::cout << "    MISMATCH " << name << "[" << at << "]: analytic " << an << " vs fd "
                  << fd << " (rel " << rel << ")\n";
      }
    }
  }
}

bool report_grads(const std::string& label, GradReport& rep) {
  std::cout << "  " << label << ": " << rep.tensors << " tensors, " << rep.probes
            << " probes, worst rel " << fmt("%.2e", rep.worst_rel)
            << (rep.worst_at.empty() ? "" : " at " + rep.worst_at)
            << (rep.failures ? " [" + std::to_string(rep.failures) + " FAILED]" : "") << "\n";
  return rep.failures == 0;
}

template <class F>
bool grad_layer(const std::string& label, std::vector<std::pair<std::string, TensorD>> named,
                const F& build_loss, i64 max_probe) {
  GradReport rep;
  check_grads(named, build_loss, max_probe, rep);
  return report_grads(label, rep);
}

std::vector<double> random_planes(i64 count, SplitMix64& rng) {
  std::vector<double> raw(static_cast<size_t>(count));
  for (auto& v : raw) v = rng.next_double();
  return raw;
}

RunConfig tiny_model_config(const std::string& model) {
  RunConfig cfg;
  cfg.model = model;
  cfg.image_size = 32;
  cfg.patch = 4;
  cfg.embed_dim = 8;
  cfg.window = 2;
  cfg.depths = {1, 1, 1, 1};
  cfg.decoder_blocks = 1;
  return cfg;
}

bool grad_full_model(const std::string& model) {
  RunConfig cfg = tiny_model_config(model);
  Vocabulary vocab = Vocabulary::build(
      {"a red circle", "a blue square", "a green dot", "circle above square"});
  EncoderSettings es = encoder_settings(cfg);
  DecoderSettings ds = decoder_settings(cfg, vocab.size());
  SplitMix64 rng(101);
  Encoder<double> enc(es, rng);
  Decoder<double> dec(ds, rng);

  SplitMix64 data_rng(102);
  auto raw = random_planes(3 * cfg.image_size * cfg.image_size, data_rng);
  std::vector<i64> tgt = vocab.encode("a red circle");
  tgt.push_back(kEos);
  std::vector<i64> ids{kBos};
  ids.insert(ids.end(), tgt.begin(), tgt.end() - 1);

  std::vector<std::pair<std::string, TensorD>> named;
  enc.collect("enc", named);
  dec.collect("dec", named);
  auto loss = [&] { return cross_entropy(dec.forward(enc.encode(raw), ids), tgt, kPad); };
  return grad_layer("full tiny model (" + model + ")", std::move(named), loss, 2);
}

TensorD rand3(i64 a, i64 b, i64 c, SplitMix64& rng) {
  return uniform<double>({a, b, c}, -1.0, 1.0, rng);
}

bool criterion_gradients() {
  bool ok = true;
  SplitMix64 rng(100);

  {
    PatchEmbed<double> pe(3, 1, 4, 4, 8, rng);
    auto raw = random_planes(3 * 16 * 16, rng);
    SplitMix64 pr(1);
    TensorD probe = uniform<double>({16, 8}, -1.0, 1.0, pr);
    std::vector<std::pair<std::string, TensorD>> named;
    pe.collect("pe", named);
    Grid g;
    ok &= grad_layer("patch embed", std::move(named),
                     [&] { return sum(mul(pe.forward(raw, 1, 16, 16, &g), probe)); }, 4);
  }
  {
    PatchMerge<double> pm(8, rng);
    TensorD x = uniform<double>({16, 8}, -1.0, 1.0, rng);
    SplitMix64 pr(2);
    TensorD probe = uniform<double>({4, 16}, -1.0, 1.0, pr);
    Grid g{1, 4, 4}, out;
    std::vector<std::pair<std::string, TensorD>> named;
    pm.collect("pm", named);
    named.emplace_back("pm.input", x);
    ok &= grad_layer("patch merge", std::move(named),
                     [&] { return sum(mul(pm.forward(x, g, &out), probe)); }, 4);
  }
  {
    auto m = Mixer<double>::make_wmlp(6, 2, 4, rng);
    TensorD x = rand3(2, 4, 6, rng);
    SplitMix64 pr(3);
    TensorD probe = rand3(2, 4, 6, pr);
    std::vector<std::pair<std::string, TensorD>> named;
    m.collect("wmlp", named);
    named.emplace_back("wmlp.input", x);
    ok &= grad_layer("mixer w_mlp", std::move(named),
                     [&] { return sum(mul(m.forward(x), probe)); }, 4);
  }
  {
    auto m = Mixer<double>::make_wmsa(6, 2, rng);
    TensorD x = rand3(2, 4, 6, rng);
    SplitMix64 pr(4);
    TensorD probe = rand3(2, 4, 6, pr);
    std::vector<std::pair<std::string, TensorD>> named;
    m.collect("wmsa", named);
    named.emplace_back("wmsa.input", x);
    ok &= grad_layer("mixer w_msa", std::move(named),
                     [&] { return sum(mul(m.forward(x), probe)); }, 4);
  }
  {
    auto m = Mixer<double>::make_global(6, 2, rng);
    TensorD x = rand3(1, 9, 6, rng);
    SplitMix64 pr(5);
    TensorD probe = rand3(1, 9, 6, pr);
    std::vector<std::pair<std::string, TensorD>> named;
    m.collect("gmsa", named);
    named.emplace_back("gmsa.input", x);
    ok &= grad_layer("mixer global_msa", std::move(named),
                     [&] { return sum(mul(m.forward(x), probe)); }, 4);
  }
  {
    auto m = Mixer<double>::make_pool(6, Window3{1, 2, 2}, 3);
    if (m.param_count() != 0) {
      std::cout << "  pool mixer unexpectedly owns parameters\n";
      ok = false;
    } else {
      std::cout << "  pool mixer: parameter free, nothing to check\n";
    }
  }
  {
    DecoderSettings ds;
    ds.blocks = 1;
    ds.model_dim = 8;
    ds.heads = 2;
    ds.ffn_dim = 12;
    ds.max_len = 6;
    ds.vocab = 10;
    Decoder<double> dec(ds, rng);
    TensorD mem = uniform<double>({4, 8}, -1.0, 1.0, rng);
    std::vector<i64> ids{kBos, 4, 5, 6};
    std::vector<i64> tgt{4, 5, 6, kEos};
    std::vector<std::pair<std::string, TensorD>> named;
    dec.collect("dec", named);
    named.emplace_back("dec.memory", mem);
    ok &= grad_layer("decoder stack", std::move(named),
                     [&] { return cross_entropy(dec.forward(mem, ids), tgt, kPad); }, 3);
  }

  ok &= grad_full_model("w_mlp");
  ok &= grad_full_model("w_msa");
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 2: geometry roundtrips

bool criterion_geometry() {
  NoGradGuard ng;
  SplitMix64 rng(200);
  i64 trips = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const i64 mt = 1 + static_cast<i64>(rng.next_below(3));
    const i64 mh = 1 + static_cast<i64>(rng.next_below(6));
    const i64 mw = 1 + static_cast<i64>(rng.next_below(6));
    Grid g{mt * (1 + static_cast<i64>(rng.next_below(3))),
           mh * (1 + static_cast<i64>(rng.next_below(4))),
           mw * (1 + static_cast<i64>(rng.next_below(4)))};
    Window3 m{mt, mh, mw};
    const i64 c = 1 + static_cast<i64>(rng.next_below(6));
    TensorD x = uniform<double>({g.tokens(), c}, -4.0, 4.0, rng);
    const size_t bytes = static_cast<size_t>(x.numel()) * sizeof(double);

    TensorD back = window_reverse(window_partition(x, g, m), g, m);
    if (back.shape() != x.shape() || std::memcmp(back.data(), x.data(), bytes) != 0) {
      std::cout << "  partition/reverse mismatch at grid " << g.t << "x" << g.h << "x" << g.w
                << " window " << m.t << "x" << m.h << "x" << m.w << "\n";
      return false;
    }
    ++trips;

    const i64 dt = static_cast<i64>(rng.next_below(static_cast<u64>(g.t)));
    const i64 dy = static_cast<i64>(rng.next_below(static_cast<u64>(g.h)));
    const i64 dx = static_cast<i64>(rng.next_below(static_cast<u64>(g.w)));
    TensorD un = cyclic_shift(cyclic_shift(x, g, dt, dy, dx), g, -dt, -dy, -dx);
    if (std::memcmp(un.data(), x.data(), bytes) != 0) {
      std::cout << "  shift/unshift mismatch at grid " << g.t << "x" << g.h << "x" << g.w
                << " deltas " << dt << "," << dy << "," << dx << "\n";
      return false;
    }
    ++trips;
  }
  std::cout << "  " << trips << " roundtrips bit-exact over 200 random grids\n";
  return true;
}

// ---------------------------------------------------------------------------
// criterion 3: stage shape pipeline

bool shape_is(const TensorF& x, i64 rows, i64 cols, const char* label, bool& ok) {
  if (x.shape() == std::vector<i64>{rows, cols}) {
    std::cout << "  " << label << ": [" << rows << "," << cols << "]\n";
    return true;
  }
  std::cout << "  " << label << ": got [" << x.dim(0) << "," << x.dim(1) << "], want [" << rows
            << "," << cols << "]\n";
  ok = false;
  return false;
}

bool criterion_shapes() {
  RunConfig cfg;
  cfg.model = "w_mlp";
  cfg.image_size = 224;
  cfg.patch = 4;
  cfg.embed_dim = 128;
  cfg.window = 14;
  cfg.depths = {2, 2, 18, 2};
  SplitMix64 rng(300);
  Encoder<float> enc(encoder_settings(cfg), rng);

  NoGradGuard ng;
  SplitMix64 data_rng(301);
  std::vector<float> raw(static_cast<size_t>(3 * 224 * 224));
  for (auto& v : raw) v = static_cast<float>(data_rng.next_double());

  bool ok = true;
  Grid g;
  TensorF x = enc.embed.forward(raw, 1, 224, 224, &g);
  shape_is(x, 3136, 128, "patch embed", ok);
  const i64 want_rows[4] = {3136, 784, 196, 49};
  const i64 want_cols[4] = {128, 256, 512, 1024};
  for (i64 s = 0; s < 4; ++s) {
    x = enc.run_stage(s, x);
    std::string label = "stage " + std::to_string(s);
    shape_is(x, want_rows[s], want_cols[s], label.c_str(), ok);
  }
  TensorF mem = enc.encode(raw);
  shape_is(mem, 49, 512, "memory", ok);
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 4: complexity formulas vs instrumented MACs

u64 measured_mixer_macs(const Mixer<float>& m, i64 nwin, i64 s, i64 c) {
  auto& mc = MacCounter::instance();
  mc.reset();
  mc.enable(true);
  {
    NoGradGuard ng;
    auto x = TensorF::zeros({nwin, s, c});
    m.forward(x);
  }
  mc.enable(false);
  u64 total = mc.total();
  mc.reset();
  return total;
}

bool pinned_cost(const char* label, u64 analytic, u64 pinned, u64 measured, bool& ok) {
  std::cout << "  " << label << ": analytic " << analytic << ", measured " << measured
            << (analytic == pinned && measured == pinned ? "" : " [MISMATCH, pinned " +
                                                                    std::to_string(pinned) + "]")
            << "\n";
  if (analytic != pinned || measured != pinned) ok = false;
  return ok;
}

bool criterion_costs() {
  bool ok = true;
  SplitMix64 rng(400);

  auto wmsa = Mixer<float>::make_wmsa(128, 4, rng);
  pinned_cost("cost_wmsa(56,56,128,14)", cost_wmsa(56, 56, 128, 14), 362872832u,
              measured_mixer_macs(wmsa, 16, 196, 128), ok);

  auto gmsa = Mixer<float>::make_global(128, 4, rng);
  pinned_cost("cost_msa(56,56,128)", cost_msa(56, 56, 128), 2723151872u,
              measured_mixer_macs(gmsa, 1, 3136, 128), ok);

  auto wmlp = Mixer<float>::make_wmlp(128, 4, 196, rng);
  pinned_cost("cost_wmlp(56,56,128,14)", cost_wmlp(56, 56, 128, 14), 78675968u,
              measured_mixer_macs(wmlp, 16, 196, 128), ok);

  i64 ordered = 0;
  for (i64 side : {28, 56, 112})
    for (i64 c : {64, 128})
      for (i64 m : {7, 14}) {
        u64 a = cost_wmlp(side, side, c, m);
        u64 b = cost_wmsa(side, side, c, m);
        u64 d = cost_msa(side, side, c);
        if (a < b && b < d) {
          ++ordered;
        } else {
          std::cout << "  ordering violated at side " << side << " c " << c << " m " << m << ": "
                    << a << " / " << b << " / " << d << "\n";
          ok = false;
        }
      }
  std::cout << "  w_mlp < w_msa < msa at " << ordered << " of 12 sweep points\n";
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 5: encoder efficiency ordering at the flagship config

bool criterion_efficiency() {
  RunConfig cfg;
  cfg.image_size = 224;
  cfg.patch = 4;
  cfg.embed_dim = 128;
  cfg.window = 14;
  cfg.depths = {2, 2, 18, 2};

  cfg.model = "w_mlp";
  CostReport mlp = model_report(cfg);
  cfg.model = "w_msa";
  CostReport msa = model_report(cfg);

  auto line = [](const char* name, const CostReport& r) {
    std::cout << "  " << name << " encoder: " << r.encoder_params << " params ("
              << fmt("%.2f", static_cast<double>(r.encoder_params) / 1e6) << "M), "
              << r.encoder_measured << " MACs ("
              << fmt("%.2f", static_cast<double>(r.encoder_measured) / 1e9) << "G)\n";
  };
  line("w_mlp", mlp);
  line("w_msa", msa);
  std::cout << "  reference full-scale captioners, different stack, no tolerance claimed:\n"
               "    mlp variant 99.11M params / 14.15 GFLOPs, attention variant 165.51M / 19.59\n";

  bool ok = true;
  if (mlp.encoder_params >= msa.encoder_params) {
    std::cout << "  encoder params not strictly smaller for w_mlp\n";
    ok = false;
  }
  if (mlp.encoder_measured >= msa.encoder_measured) {
    std::cout << "  encoder MACs not strictly smaller for w_mlp\n";
    ok = false;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 6: end-to-end learning on the synthetic corpus

bool criterion_learning(const std::string& variant) {
  RunConfig cfg;  // defaults are the 64x64 / C=32 / M=4 / depths 1,1,2,1 recipe
  cfg.warmup = 500;
  cfg.epochs = 250;  // 64 samples at batch 9 gives 8 steps per epoch
  if (variant == "video") {
    cfg.model = "w_mlp";
    cfg.clip_len = 4;
    cfg.patch_t = 2;
    cfg.window_t = 2;
  } else {
    cfg.model = variant;
  }

  std::string dir = scratch_dir("learn_" + variant);
  std::string corpus = dir + "/corpus";
  fs::create_directories(corpus);
  gen_corpus(corpus, 1, 64, 64);

  TrainOptions opts;
  opts.out_dir = dir + "/run";
  opts.max_steps = 2000;
  opts.target_bleu = 0.90;
  opts.eval_every = 100;
  TrainResult res = train(cfg, corpus, opts);

  std::cout << "  " << variant << ": bleu4 " << fmt("%.4f", res.bleu) << " after " << res.steps
            << " steps\n";
  bool ok = res.bleu >= 0.90 && res.steps <= 2000;
  if (ok) fs::remove_all(dir);
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 7: metric hand oracles

bool criterion_metrics() {
  bool ok = true;
  {
    EvalRecord r = make_record("a b c d e f g h", {"a b c d", "c d e", "d e f", "e f g", "f g h"});
    double got = bleu4({r});
    double want = std::pow(0.2, 0.25);
    std::cout << "  bleu4 hand case: " << fmt("%.12f", got) << " vs " << fmt("%.12f", want)
              << "\n";
    if (std::abs(got - want) >= 1e-9) ok = false;
  }
  {
    std::vector<EvalRecord> rs = {
        make_record("red circle", {"red circle"}),
        make_record("blue square", {"blue circle"}),
        make_record("green dot", {"green dot big"}),
    };
    double l3 = std::log(3.0), l15 = std::log(1.5);
    double r1 = 0.25 * (1.0 + 1.0);
    double r2 = 0.25 * (l3 / (std::sqrt(2.0) * std::sqrt(l3 * l3 + l15 * l15)));
    double r3 = 0.25 * std::exp(-1.0 / 72.0) * (2.0 / std::sqrt(6.0) + 1.0 / std::sqrt(2.0));
    double want = 10.0 * (r1 + r2 + r3) / 3.0;
    double got = cider(rs);
    std::cout << "  cider hand case: " << fmt("%.12f", got) << " vs " << fmt("%.12f", want)
              << "\n";
    if (std::abs(got - want) >= 1e-9) ok = false;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// criterion 8: determinism and checkpoint persistence

bool criterion_determinism() {
  std::string dir = scratch_dir("determinism");
  std::string corpus = dir + "/corpus";
  fs::create_directories(corpus);
  gen_corpus(corpus, 5, 8, 32);

  RunConfig cfg;
  cfg.model = "w_mlp";
  cfg.image_size = 32;
  cfg.patch = 4;
  cfg.embed_dim = 8;
  cfg.window = 2;
  cfg.depths = {1, 1, 1, 1};
  cfg.decoder_blocks = 1;
  cfg.decoder_ffn = 32;
  cfg.seed = 7;
  cfg.epochs = 8;
  cfg.batch = 4;
  cfg.warmup = 10;

  TrainOptions a, b;
  a.out_dir = dir + "/a";
  b.out_dir = dir + "/b";
  train(cfg, corpus, a);
  train(cfg, corpus, b);

  bool ok = true;
  std::string log_a = read_bytes(a.out_dir + "/train_log.csv");
  if (log_a.empty() || log_a != read_bytes(b.out_dir + "/train_log.csv")) {
    std::cout << "  training logs differ between identically seeded runs\n";
    ok = false;
  } else {
    std::cout << "  two seeded runs: identical logs (" << log_a.size() << " bytes)\n";
  }
  std::string ckpt_a = read_bytes(a.out_dir + "/last.ckpt");
  if (ckpt_a.empty() || ckpt_a != read_bytes(b.out_dir + "/last.ckpt")) {
    std::cout << "  checkpoints differ between identically seeded runs\n";
    ok = false;
  }

  Snapshot snap = load_checkpoint(a.out_dir + "/last.ckpt");
  std::string resaved = dir + "/resaved.ckpt";
  save_checkpoint(resaved, snap);
  if (read_bytes(resaved) != ckpt_a) {
    std::cout << "  save/load/save changed checkpoint bytes\n";
    ok = false;
  } else {
    std::cout << "  save/load/save byte-identical (" << ckpt_a.size() << " bytes)\n";
  }
  std::string resaved2 = dir + "/resaved2.ckpt";
  save_checkpoint(resaved2, load_checkpoint(resaved));
  if (read_bytes(resaved2) != ckpt_a) {
    std::cout << "  second reload drifted\n";
    ok = false;
  }
  if (ok) fs::remove_all(dir);
  return ok;
}

// ---------------------------------------------------------------------------

struct Entry {
  int number;
  std::string variant;  // criterion 6 only
  std::string label;
  std::function<bool()> run;
  double budget_s;  // 0 = no pinned bound
};

std::vector<Entry> all_entries() {
  return {
      {1, "", "gradient suite", criterion_gradients, 120.0},
      {2, "", "geometry roundtrips", criterion_geometry, 10.0},
      {3, "", "shape pipeline", criterion_shapes, 0.0},
      {4, "", "complexity formulas", criterion_costs, 300.0},
      {5, "", "efficiency ordering", criterion_efficiency, 0.0},
      {6, "w_mlp", "end-to-end learning", [] { return criterion_learning("w_mlp"); }, 900.0},
      {6, "w_msa", "end-to-end learning", [] { return criterion_learning("w_msa"); }, 900.0},
      {6, "video", "end-to-end learning", [] { return criterion_learning("video"); }, 900.0},
      {7, "", "metric oracles", criterion_metrics, 0.0},
      {8, "", "determinism and persistence", criterion_determinism, 0.0},
  };
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Entry> selected;
  auto entries = all_entries();
  if (argc == 1) {
    selected = entries;
  } else {
    int number = std::atoi(argv[1]);
    std::string variant = argc > 2 ? argv[2] : "";
    for (auto& e : entries)
      if (e.number == number && (variant.empty() || e.variant == variant)) selected.push_back(e);
    if (selected.empty()) {
      std::cerr << "usage: acceptance [1-8] [w_mlp|w_msa|video]\n";
      return 2;
    }
  }

  int failures = 0;
  for (auto& e : selected) {
    std::string name = "criterion " + std::to_string(e.number) +
                       (e.variant.empty() ? "" : " [" + e.variant + "]") + " (" + e.label + ")";
    std::cout << name << "\n";
    auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = e.run();
    } catch (const std::exception& ex) {
      std::cout << "  exception: " << ex.what() << "\n";
    }
    double elapsed = seconds_since(t0);
    if (ok && e.budget_s > 0.0 && elapsed >= e.budget_s) {
      std::cout << "  over the " << fmt("%.0f", e.budget_s) << " s budget\n";
      ok = false;
    }
    std::cout << name << ": " << (ok ? "PASS" : "FAIL") << " (" << fmt("%.1f", elapsed)
              << " s)\n";
    if (!ok) ++failures;
  }
  if (selected.size() > 1)
    std::cout << (failures ? "FAILED: " + std::to_string(failures) + " of " : "all ")
              << selected.size() << " checks" << (failures ? "" : " passed") << "\n";
  return failures ? 1 : 0;
}
