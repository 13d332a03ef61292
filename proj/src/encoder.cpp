#include "swincap/encoder.hpp"

#include <algorithm>
#include <string>

#include "swincap/common.hpp"

namespace swincap {

namespace {

std::string dims3(i64 a, i64 b, i64 c) {
  return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c);
}

template <class S>
PatchEmbed<S> build_embed(const EncoderSettings& c, SplitMix64& rng) {
  if (c.in_channels <= 0 || c.embed_dim <= 0 || c.patch <= 0 || c.patch_t <= 0)
    throw ConfigError("patch embedding: channels, patch and embed_dim must be positive");
  if (c.img_t % c.patch_t != 0 || c.img_h % c.patch != 0 || c.img_w % c.patch != 0)
    throw ConfigError("patch embedding: input " + dims3(c.img_t, c.img_h, c.img_w) +
                      " not divisible by patch " + dims3(c.patch_t, c.patch, c.patch));
  return PatchEmbed<S>(c.in_channels, c.patch_t, c.patch, c.patch, c.embed_dim, rng);
}

}  // namespace

i64 fit_heads(i64 want, i64 channels) {
  i64 h = std::min(want, channels);
  if (h < 1) h = 1;
  while (channels % h != 0) --h;
  return h;
}

template <class S>
Tensor<S> EncoderBlock<S>::forward(const Tensor<S>& x) const {
  Tensor<S> h = layernorm(x, ln1_g, ln1_b);
  bool moved = shifted && (st != 0 || sy != 0 || sx != 0);
  if (moved) h = cyclic_shift(h, grid, -st, -sy, -sx);
  Tensor<S> wins = window_partition(h, grid, win);
  Tensor<S> mixed = mask.valid() ? mixer.forward(wins, mask) : mixer.forward(wins);
  h = window_reverse(mixed, grid, win);
  if (moved) h = cyclic_shift(h, grid, st, sy, sx);
  Tensor<S> y = add(x, h);
  Tensor<S> m = layernorm(y, ln2_g, ln2_b);
  m = add_bias(matmul_nt(m, fc1_w), fc1_b);
  m = gelu(m);
  m = add_bias(matmul_nt(m, fc2_w), fc2_b);
  return add(y, m);
}

template <class S>
void EncoderBlock<S>::collect(const std::string& prefix,
                              std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  mixer.collect(prefix + ".mix", out);
  out.emplace_back(prefix + ".ln1_g", ln1_g);
  out.emplace_back(prefix + ".ln1_b", ln1_b);
  out.emplace_back(prefix + ".ln2_g", ln2_g);
  out.emplace_back(prefix + ".ln2_b", ln2_b);
  out.emplace_back(prefix + ".fc1_w", fc1_w);
  out.emplace_back(prefix + ".fc1_b", fc1_b);
  out.emplace_back(prefix + ".fc2_w", fc2_w);
  out.emplace_back(prefix + ".fc2_b", fc2_b);
}

template <class S>
Encoder<S>::Encoder(const EncoderSettings& c, SplitMix64& rng)
    : cfg(c), embed(build_embed<S>(c, rng)) {
  for (i64 d : cfg.depths)
    if (d < 1) throw ConfigError("encoder: every stage needs at least one block");
  Grid g{cfg.img_t / cfg.patch_t, cfg.img_h / cfg.patch, cfg.img_w / cfg.patch};
  stages.reserve(4);
  for (i64 i = 0; i < 4; ++i) {
    std::string where = "stage " + std::to_string(i);
    i64 ch = cfg.embed_dim << i;
    EncoderStage<S> stage;
    if (i > 0) {
      if (g.h % 2 != 0 || g.w % 2 != 0)
        throw ConfigError(where + ": cannot halve odd grid " + dims3(g.t, g.h, g.w));
      stage.merge.emplace(ch / 2, rng);
      g = Grid{g.t, g.h / 2, g.w / 2};
    }
    stage_grids[i] = g;
    bool global = cfg.kind == MixerKind::global_msa;
    Window3 win{g.t, g.h, g.w};
    if (!global) {
      win = Window3{cfg.window_t, cfg.window, cfg.window};
      if (cfg.clamp_window) win = clamp_window(win, g);
    }
    if (win.t <= 0 || win.h <= 0 || win.w <= 0 || g.t % win.t != 0 || g.h % win.h != 0 ||
        g.w % win.w != 0)
      throw ConfigError(where + ": window " + dims3(win.t, win.h, win.w) +
                        " does not tile grid " + dims3(g.t, g.h, g.w));
    stage_windows[i] = win;
    i64 nheads = fit_heads(cfg.heads[i], ch);
    i64 st = global ? 0 : win.t / 2;
    i64 sy = global ? 0 : win.h / 2;
    i64 sx = global ? 0 : win.w / 2;
    for (i64 b = 0; b < cfg.depths[i]; ++b) {
      EncoderBlock<S> blk;
      blk.grid = g;
      blk.win = win;
      blk.shifted = b % 2 == 1;
      if (blk.shifted) {
        blk.st = st;
        blk.sy = sy;
        blk.sx = sx;
      }
      switch (cfg.kind) {
        case MixerKind::w_mlp:
          blk.mixer = Mixer<S>::make_wmlp(ch, nheads, win.tokens(), rng);
          break;
        case MixerKind::w_msa:
          blk.mixer = Mixer<S>::make_wmsa(ch, nheads, rng);
          break;
        case MixerKind::global_msa:
          blk.mixer = Mixer<S>::make_global(ch, nheads, rng);
          break;
        case MixerKind::pool:
          blk.mixer = Mixer<S>::make_pool(ch, win, cfg.pool_k);
          break;
      }
      blk.ln1_g = Tensor<S>::full({ch}, S(1)).set_requires_grad(true);
      blk.ln1_b = Tensor<S>::zeros({ch}).set_requires_grad(true);
      blk.ln2_g = Tensor<S>::full({ch}, S(1)).set_requires_grad(true);
      blk.ln2_b = Tensor<S>::zeros({ch}).set_requires_grad(true);
      blk.fc1_w = trunc_normal<S>({4 * ch, ch}, 0.02, rng).set_requires_grad(true);
      blk.fc1_b = Tensor<S>::zeros({4 * ch}).set_requires_grad(true);
      blk.fc2_w = trunc_normal<S>({ch, 4 * ch}, 0.02, rng).set_requires_grad(true);
      blk.fc2_b = Tensor<S>::zeros({ch}).set_requires_grad(true);
      if (cfg.attn_mask && cfg.kind == MixerKind::w_msa && blk.shifted &&
          (st != 0 || sy != 0 || sx != 0))
        blk.mask = shift_attn_mask<S>(g, win, st, sy, sx);
      stage.blocks.push_back(std::move(blk));
    }
    stages.push_back(std::move(stage));
  }
  head_w = trunc_normal<S>({cfg.out_dim, cfg.embed_dim * 8}, 0.02, rng).set_requires_grad(true);
  head_b = Tensor<S>::zeros({cfg.out_dim}).set_requires_grad(true);
}

template <class S>
Tensor<S> Encoder<S>::run_stage(i64 i, const Tensor<S>& x) const {
  const EncoderStage<S>& stage = stages[static_cast<size_t>(i)];
  Tensor<S> h = x;
  if (stage.merge) {
    Grid after;
    h = stage.merge->forward(h, stage_grids[static_cast<size_t>(i - 1)], &after);
  }
  for (const EncoderBlock<S>& blk : stage.blocks) h = blk.forward(h);
  return h;
}

template <class S>
Tensor<S> Encoder<S>::encode(const std::vector<S>& raw) const {
  Grid g;
  Tensor<S> x = embed.forward(raw, cfg.img_t, cfg.img_h, cfg.img_w, &g);
  for (i64 i = 0; i < 4; ++i) x = run_stage(i, x);
  return add_bias(matmul_nt(x, head_w), head_b);
}

template <class S>
void Encoder<S>::collect(const std::string& prefix,
                         std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  embed.collect(prefix + ".embed", out);
  for (size_t i = 0; i < stages.size(); ++i) {
    std::string sp = prefix + ".s" + std::to_string(i);
    if (stages[i].merge) stages[i].merge->collect(sp + ".merge", out);
    for (size_t b = 0; b < stages[i].blocks.size(); ++b)
      stages[i].blocks[b].collect(sp + ".b" + std::to_string(b), out);
  }
  out.emplace_back(prefix + ".head_w", head_w);
  out.emplace_back(prefix + ".head_b", head_b);
}

template <class S>
u64 Encoder<S>::param_count() const {
  std::vector<std::pair<std::string, Tensor<S>>> all;
  collect("e", all);
  u64 n = 0;
  for (const auto& [name, t] : all) n += static_cast<u64>(t.numel());
  return n;
}

#define SWINCAP_INSTANTIATE_ENCODER(S)       \
  template struct EncoderBlock<S>;           \
  template struct Encoder<S>;

SWINCAP_INSTANTIATE_ENCODER(float)
SWINCAP_INSTANTIATE_ENCODER(double)

}  // namespace swincap
