#include "swincap/cost.hpp"

#include <functional>
#include <sstream>

#include "swincap/common.hpp"

namespace swincap {

namespace {

u64 uu(i64 v) { return static_cast<u64>(v); }

u64 tensor_sum(const std::vector<std::pair<std::string, TensorF>>& ts) {
  u64 n = 0;
  for (const auto& [name, t] : ts) n += uu(t.numel());
  return n;
}

u64 measure(const std::function<void()>& fn) {
  auto& mc = MacCounter::instance();
  mc.reset();
  fn();
  return mc.total();
}

struct CountingScope {
  CountingScope() { MacCounter::instance().enable(true); }
  ~CountingScope() {
    MacCounter::instance().enable(false);
    MacCounter::instance().reset();
  }
};

void row(CostReport& r, const std::string& name, u64 params, u64 analytic, u64 measured) {
  if (analytic != measured)
    throw NumericError("cost model mismatch in " + name + ": analytic " +
                       std::to_string(analytic) + " vs measured " + std::to_string(measured));
  r.modules.push_back({name, params, analytic, measured});
}

}  // namespace

u64 cost_msa(i64 h, i64 w, i64 c) {
  if (h < 1 || w < 1 || c < 1) throw ConfigError("cost_msa needs positive dims");
  const u64 hw = uu(h) * uu(w), C = uu(c);
  return 4 * hw * C * C + 2 * hw * hw * C;
}

u64 cost_wmsa(i64 h, i64 w, i64 c, i64 m) {
  if (h < 1 || w < 1 || c < 1 || m < 1) throw ConfigError("cost_wmsa needs positive dims");
  if (h % m != 0 || w % m != 0) throw ConfigError("cost_wmsa: window must tile the grid");
  const u64 hw = uu(h) * uu(w), C = uu(c), M2 = uu(m) * uu(m);
  return 4 * hw * C * C + 2 * M2 * hw * C;
}

u64 cost_wmlp(i64 h, i64 w, i64 c, i64 m) {
  if (h < 1 || w < 1 || c < 1 || m < 1) throw ConfigError("cost_wmlp needs positive dims");
  if (h % m != 0 || w % m != 0) throw ConfigError("cost_wmlp: window must tile the grid");
  return uu(h) * uu(w) * uu(m) * uu(m) * uu(c);
}

CostReport model_report(const RunConfig& cfg, i64 vocab) {
  CostReport rep;
  rep.config_echo = to_text(cfg);

  SplitMix64 rng(cfg.seed);
  EncoderSettings es = encoder_settings(cfg);
  Encoder<float> enc(es, rng);
  Decoder<float> dec(decoder_settings(cfg, vocab), rng);

  NoGradGuard ng;
  CountingScope counting;

  std::vector<float> raw(uu(es.in_channels * es.img_t * es.img_h * es.img_w), 0.5f);
  const i64 cin_patch = es.in_channels * es.patch_t * es.patch * es.patch;

  // patch embedding
  Grid g0 = enc.stage_grids[0];
  TensorF x;
  u64 measured = measure([&] {
    Grid g;
    x = enc.embed.forward(raw, es.img_t, es.img_h, es.img_w, &g);
  });
  std::vector<std::pair<std::string, TensorF>> ps;
  enc.embed.collect("e", ps);
  row(rep, "patch_embed", tensor_sum(ps), uu(g0.tokens()) * uu(cin_patch) * uu(es.embed_dim),
      measured);

  // stages
  for (i64 i = 0; i < 4; ++i) {
    const Grid g = enc.stage_grids[static_cast<size_t>(i)];
    const i64 tokens = g.tokens();
    const i64 ci = es.embed_dim << i;
    const i64 s = enc.stage_windows[static_cast<size_t>(i)].tokens();
    u64 analytic = 0;
    if (i > 0) {
      const i64 cp = ci / 2;
      analytic += uu(tokens) * uu(4 * cp) * uu(2 * cp);
    }
    const bool attention = es.kind == MixerKind::w_msa || es.kind == MixerKind::global_msa;
    for (i64 b = 0; b < es.depths[static_cast<size_t>(i)]; ++b) {
      if (attention)
        analytic += 4 * uu(tokens) * uu(ci) * uu(ci) + 2 * uu(tokens) * uu(s) * uu(ci);
      else
        analytic += uu(tokens) * uu(s) * uu(ci);  // grouped spatial mix
      analytic += 8 * uu(tokens) * uu(ci) * uu(ci);  // C -> 4C -> C
    }
    measured = measure([&] { x = enc.run_stage(i, x); });
    ps.clear();
    if (enc.stages[static_cast<size_t>(i)].merge)
      enc.stages[static_cast<size_t>(i)].merge->collect("m", ps);
    for (const auto& blk : enc.stages[static_cast<size_t>(i)].blocks) blk.collect("b", ps);
    row(rep, "stage" + std::to_string(i), tensor_sum(ps), analytic, measured);
  }

  // projection head to the decoder width
  const i64 c3 = es.embed_dim * 8;
  TensorF memory;
  measured = measure([&] { memory = add_bias(matmul_nt(x, enc.head_w), enc.head_b); });
  row(rep, "head", uu(enc.head_w.numel() + enc.head_b.numel()),
      uu(enc.stage_grids[3].tokens()) * uu(c3) * uu(es.out_dim), measured);

  for (const ModuleCost& m : rep.modules) {
    rep.encoder_params += m.params;
    rep.encoder_analytic += m.analytic_macs;
    rep.encoder_measured += m.measured_macs;
  }

  // decoder at full sequence length
  const i64 len = dec.cfg.max_len;
  const i64 L = enc.memory_tokens();
  const u64 d = uu(dec.cfg.model_dim), ffn = uu(dec.cfg.ffn_dim);
  u64 dec_analytic = 0;
  dec_analytic += uu(dec.cfg.blocks) *
                  (4 * uu(len) * d * d + 2 * uu(len) * uu(len) * d +  // masked self-attention
                   2 * (uu(len) + uu(L)) * d * d + 2 * uu(len) * uu(L) * d +  // cross-attention
                   2 * uu(len) * d * ffn);                                    // feed-forward
  dec_analytic += uu(len) * d * uu(vocab);  // output logits
  std::vector<i64> ids(static_cast<size_t>(len), kBos);
  measured = measure([&] { (void)dec.forward(memory, ids); });
  row(rep, "decoder", dec.param_count(), dec_analytic, measured);

  for (const ModuleCost& m : rep.modules) {
    rep.total_params += m.params;
    rep.total_analytic += m.analytic_macs;
    rep.total_measured += m.measured_macs;
  }
  return rep;
}

std::string report_markdown(const CostReport& r) {
  std::ostringstream os;
  os << "| module | params | analytic MACs | measured MACs |\n";
  os << "|---|---:|---:|---:|\n";
  for (const ModuleCost& m : r.modules)
    os << "| " << m.name << " | " << m.params << " | " << m.analytic_macs << " | "
       << m.measured_macs << " |\n";
  os << "| encoder total | " << r.encoder_params << " | " << r.encoder_analytic << " | "
     << r.encoder_measured << " |\n";
  os << "| model total | " << r.total_params << " | " << r.total_analytic << " | "
     << r.total_measured << " |\n";
  return os.str();
}

std::string report_csv(const CostReport& r) {
  std::ostringstream os;
  os << "module,params,analytic_macs,measured_macs\n";
  for (const ModuleCost& m : r.modules)
    os << m.name << "," << m.params << "," << m.analytic_macs << "," << m.measured_macs << "\n";
  os << "encoder_total," << r.encoder_params << "," << r.encoder_analytic << ","
     << r.encoder_measured << "\n";
  os << "model_total," << r.total_params << "," << r.total_analytic << "," << r.total_measured
     << "\n";
  return os.str();
}

}  // namespace swincap
