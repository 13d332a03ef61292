#include "swincap/mixers.hpp"

#include <cmath>

namespace swincap {

MixerKind mixer_kind_from_string(const std::string& s) {
  if (s == "w_mlp") return MixerKind::w_mlp;
  if (s == "w_msa") return MixerKind::w_msa;
  if (s == "global_msa") return MixerKind::global_msa;
  if (s == "pool") return MixerKind::pool;
  throw ConfigError("unknown mixer kind '" + s + "'");
}

std::string to_string(MixerKind k) {
  switch (k) {
    case MixerKind::w_mlp: return "w_mlp";
    case MixerKind::w_msa: return "w_msa";
    case MixerKind::global_msa: return "global_msa";
    case MixerKind::pool: return "pool";
  }
  return "?";
}

namespace {

void require_heads(i64 channels, i64 heads) {
  if (heads <= 0 || channels % heads != 0)
    throw ConfigError("mixer: " + std::to_string(heads) + " heads do not divide " +
                      std::to_string(channels) + " channels");
}

}  // namespace

template <class S>
Mixer<S> Mixer<S>::make_wmlp(i64 channels, i64 heads, i64 tokens, SplitMix64& rng) {
  require_heads(channels, heads);
  if (tokens <= 0) throw ConfigError("mixer: per-window token count must be positive");
  Mixer m;
  m.kind = MixerKind::w_mlp;
  m.channels = channels;
  m.heads = heads;
  m.tokens = tokens;
  m.mix_w = trunc_normal<S>({heads, tokens, tokens}, 0.02, rng);
  m.mix_b = Tensor<S>::zeros({heads, tokens});
  m.mix_w.set_requires_grad(true);
  m.mix_b.set_requires_grad(true);
  return m;
}

template <class S>
Mixer<S> Mixer<S>::make_wmsa(i64 channels, i64 heads, SplitMix64& rng) {
  require_heads(channels, heads);
  Mixer m;
  m.kind = MixerKind::w_msa;
  m.channels = channels;
  m.heads = heads;
  m.wq = trunc_normal<S>({channels, channels}, 0.02, rng);
  m.wk = trunc_normal<S>({channels, channels}, 0.02, rng);
  m.wv = trunc_normal<S>({channels, channels}, 0.02, rng);
  m.wo = trunc_normal<S>({channels, channels}, 0.02, rng);
  m.wq.set_requires_grad(true);
  m.wk.set_requires_grad(true);
  m.wv.set_requires_grad(true);
  m.wo.set_requires_grad(true);
  return m;
}

template <class S>
Mixer<S> Mixer<S>::make_global(i64 channels, i64 heads, SplitMix64& rng) {
  auto m = make_wmsa(channels, heads, rng);
  m.kind = MixerKind::global_msa;
  return m;
}

template <class S>
Mixer<S> Mixer<S>::make_pool(i64 channels, const Window3& win, i64 k) {
  if (k <= 0 || k % 2 == 0) throw ConfigError("pool mixer: neighborhood must be odd, got " +
                                              std::to_string(k));
  Mixer m;
  m.kind = MixerKind::pool;
  m.channels = channels;
  m.heads = 1;
  m.tokens = win.tokens();
  const i64 s = m.tokens;
  std::vector<S> w(static_cast<size_t>(s * s), S(0));
  const i64 r = k / 2;
  for (i64 t = 0; t < win.t; ++t)
    for (i64 y = 0; y < win.h; ++y)
      for (i64 x = 0; x < win.w; ++x) {
        const i64 j = (t * win.h + y) * win.w + x;
        i64 count = 0;
        for (i64 dy = -r; dy <= r; ++dy)
          for (i64 dx = -r; dx <= r; ++dx) {
            const i64 yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < win.h && xx >= 0 && xx < win.w) ++count;
          }
        for (i64 dy = -r; dy <= r; ++dy)
          for (i64 dx = -r; dx <= r; ++dx) {
            const i64 yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < win.h && xx >= 0 && xx < win.w)
              w[static_cast<size_t>(j * s + (t * win.h + yy) * win.w + xx)] = S(1) / S(count);
          }
        w[static_cast<size_t>(j * s + j)] -= S(1);  // minus identity
      }
  m.pool_w = Tensor<S>::from_data({1, s, s}, std::move(w));
  m.pool_b = Tensor<S>::zeros({1, s});
  return m;
}

namespace {

template <class S>
Tensor<S> attention(const Tensor<S>& wins, const Mixer<S>& m, const Tensor<S>* mask) {
  const i64 nwin = wins.dim(0), s = wins.dim(1), c = wins.dim(2);
  const i64 hd = c / m.heads;
  auto q = matmul_nt(wins, m.wq);
  auto k = matmul_nt(wins, m.wk);
  auto v = matmul_nt(wins, m.wv);
  const S sc = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

  std::vector<Tensor<S>> win_outs;
  win_outs.reserve(static_cast<size_t>(nwin));
  for (i64 w = 0; w < nwin; ++w) {
    std::vector<Tensor<S>> head_outs;
    head_outs.reserve(static_cast<size_t>(m.heads));
    for (i64 h = 0; h < m.heads; ++h) {
      auto qb = block(q, w * s, s, h * hd, hd);
      auto kb = block(k, w * s, s, h * hd, hd);
      auto vb = block(v, w * s, s, h * hd, hd);
      auto scores = scale(matmul_nt(qb, kb), sc);
      if (mask) scores = add(scores, block(*mask, w * s, s, 0, s));
      head_outs.push_back(matmul(softmax(scores, -1), vb));
    }
    win_outs.push_back(concat_cols(head_outs));
  }
  auto cat = concat_rows(win_outs);
  return reshape(matmul_nt(cat, m.wo), {nwin, s, c});
}

}  // namespace

template <class S>
Tensor<S> Mixer<S>::forward(const Tensor<S>& wins) const {
  return forward(wins, Tensor<S>());
}

template <class S>
Tensor<S> Mixer<S>::forward(const Tensor<S>& wins, const Tensor<S>& mask) const {
  if (wins.rank() != 3)
    throw ShapeError("mixer: input must be [windows, tokens, channels]");
  if (wins.dim(2) != channels)
    throw ShapeError("mixer: got " + std::to_string(wins.dim(2)) + " channels, built for " +
                     std::to_string(channels));
  const bool has_mask = mask.valid();
  if (has_mask && kind != MixerKind::w_msa && kind != MixerKind::global_msa)
    throw ConfigError("mixer: score masks only apply to attention kinds");
  if (has_mask &&
      (mask.rank() != 3 || mask.dim(0) != wins.dim(0) || mask.dim(1) != wins.dim(1) ||
       mask.dim(2) != wins.dim(1)))
    throw ShapeError("mixer: mask must be [windows, tokens, tokens]");

  switch (kind) {
    case MixerKind::w_mlp:
      if (wins.dim(1) != tokens)
        throw ShapeError("w_mlp: got windows of " + std::to_string(wins.dim(1)) +
                         " tokens, parameters built for " + std::to_string(tokens));
      return grouped_spatial_mix(wins, mix_w, mix_b);
    case MixerKind::w_msa:
    case MixerKind::global_msa:
      return attention(wins, *this, has_mask ? &mask : nullptr);
    case MixerKind::pool:
      if (wins.dim(1) != tokens)
        throw ShapeError("pool: got windows of " + std::to_string(wins.dim(1)) +
                         " tokens, parameters built for " + std::to_string(tokens));
      return grouped_spatial_mix(wins, pool_w, pool_b);
  }
  throw ConfigError("mixer: unhandled kind");
}

template <class S>
Tensor<S> global_msa(const Tensor<S>& tokens, const Mixer<S>& m) {
  if (m.kind != MixerKind::global_msa && m.kind != MixerKind::w_msa)
    throw ConfigError("global_msa needs attention parameters");
  auto one = reshape(tokens, {i64(1), tokens.rows(), tokens.cols()});
  return reshape(m.forward(one), {tokens.rows(), tokens.cols()});
}

template <class S>
u64 Mixer<S>::param_count() const {
  switch (kind) {
    case MixerKind::w_mlp:
      return static_cast<u64>(heads) * static_cast<u64>(tokens) * static_cast<u64>(tokens + 1);
    case MixerKind::w_msa:
    case MixerKind::global_msa:
      return 4ull * static_cast<u64>(channels) * static_cast<u64>(channels);
    case MixerKind::pool:
      return 0;
  }
  return 0;
}

template <class S>
void Mixer<S>::collect(const std::string& prefix,
                       std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  switch (kind) {
    case MixerKind::w_mlp:
      out.emplace_back(prefix + ".mix_w", mix_w);
      out.emplace_back(prefix + ".mix_b", mix_b);
      break;
    case MixerKind::w_msa:
    case MixerKind::global_msa:
      out.emplace_back(prefix + ".wq", wq);
      out.emplace_back(prefix + ".wk", wk);
      out.emplace_back(prefix + ".wv", wv);
      out.emplace_back(prefix + ".wo", wo);
      break;
    case MixerKind::pool:
      break;  // fixed weights, nothing to persist
  }
}

#define SWINCAP_INSTANTIATE_MIXERS(S)                                    \
  template struct Mixer<S>;                                              \
  template Tensor<S> global_msa<S>(const Tensor<S>&, const Mixer<S>&)

SWINCAP_INSTANTIATE_MIXERS(float);
SWINCAP_INSTANTIATE_MIXERS(double);

}  // namespace swincap
