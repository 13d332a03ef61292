#include "swincap/decoder.hpp"

#include <cmath>
#include <string>

#include "swincap/common.hpp"

namespace swincap {

namespace {

template <class S>
Tensor<S> attend(const Tensor<S>& q_src, const Tensor<S>& kv_src, const Tensor<S>& wq,
                 const Tensor<S>& wk, const Tensor<S>& wv, const Tensor<S>& wo, i64 heads,
                 const Tensor<S>& mask) {
  i64 d = q_src.cols();
  i64 lq = q_src.rows();
  i64 lk = kv_src.rows();
  i64 hd = d / heads;
  Tensor<S> q = matmul_nt(q_src, wq);
  Tensor<S> k = matmul_nt(kv_src, wk);
  Tensor<S> v = matmul_nt(kv_src, wv);
  S inv = S(1) / static_cast<S>(std::sqrt(static_cast<double>(hd)));
  std::vector<Tensor<S>> ctx;
  ctx.reserve(static_cast<size_t>(heads));
  for (i64 h = 0; h < heads; ++h) {
    Tensor<S> qh = block(q, 0, lq, h * hd, hd);
    Tensor<S> kh = block(k, 0, lk, h * hd, hd);
    Tensor<S> vh = block(v, 0, lk, h * hd, hd);
    Tensor<S> s = scale(matmul_nt(qh, kh), inv);
    if (mask.valid()) s = add(s, mask);
    s = softmax(s, -1);
    ctx.push_back(matmul(s, vh));
  }
  return matmul_nt(concat_cols(ctx), wo);
}

template <class S>
Tensor<S> causal_mask(i64 len) {
  std::vector<S> m(static_cast<size_t>(len * len), S(0));
  for (i64 i = 0; i < len; ++i)
    for (i64 j = i + 1; j < len; ++j) m[static_cast<size_t>(i * len + j)] = S(-1e9);
  return Tensor<S>::from_data({len, len}, std::move(m));
}

}  // namespace

template <class S>
Tensor<S> sinusoid_table(i64 len, i64 dim) {
  std::vector<S> p(static_cast<size_t>(len * dim));
  for (i64 pos = 0; pos < len; ++pos) {
    for (i64 i = 0; i < dim; i += 2) {
      double angle = pos / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(dim));
      p[static_cast<size_t>(pos * dim + i)] = static_cast<S>(std::sin(angle));
      if (i + 1 < dim) p[static_cast<size_t>(pos * dim + i + 1)] = static_cast<S>(std::cos(angle));
    }
  }
  return Tensor<S>::from_data({len, dim}, std::move(p));
}

template <class S>
void DecoderBlock<S>::collect(const std::string& prefix,
                              std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  out.emplace_back(prefix + ".ln1_g", ln1_g);
  out.emplace_back(prefix + ".ln1_b", ln1_b);
  out.emplace_back(prefix + ".sq", sq);
  out.emplace_back(prefix + ".sk", sk);
  out.emplace_back(prefix + ".sv", sv);
  out.emplace_back(prefix + ".so", so);
  out.emplace_back(prefix + ".ln2_g", ln2_g);
  out.emplace_back(prefix + ".ln2_b", ln2_b);
  out.emplace_back(prefix + ".cq", cq);
  out.emplace_back(prefix + ".ck", ck);
  out.emplace_back(prefix + ".cv", cv);
  out.emplace_back(prefix + ".co", co);
  out.emplace_back(prefix + ".ln3_g", ln3_g);
  out.emplace_back(prefix + ".ln3_b", ln3_b);
  out.emplace_back(prefix + ".fc1_w", fc1_w);
  out.emplace_back(prefix + ".fc1_b", fc1_b);
  out.emplace_back(prefix + ".fc2_w", fc2_w);
  out.emplace_back(prefix + ".fc2_b", fc2_b);
}

template <class S>
Decoder<S>::Decoder(const DecoderSettings& c, SplitMix64& rng) : cfg(c) {
  if (cfg.vocab < 4) throw ConfigError("decoder: vocabulary must include the reserved ids");
  if (cfg.model_dim <= 0 || cfg.heads <= 0 || cfg.model_dim % cfg.heads != 0)
    throw ConfigError("decoder: heads must divide model_dim");
  if (cfg.blocks < 1 || cfg.ffn_dim < 1 || cfg.max_len < 2)
    throw ConfigError("decoder: blocks, ffn_dim and max_len must be positive");
  i64 d = cfg.model_dim;
  embed_w = trunc_normal<S>({cfg.vocab, d}, 0.02, rng).set_requires_grad(true);
  pos = sinusoid_table<S>(cfg.max_len, d);
  blocks.resize(static_cast<size_t>(cfg.blocks));
  for (DecoderBlock<S>& b : blocks) {
    b.ln1_g = Tensor<S>::full({d}, S(1)).set_requires_grad(true);
    b.ln1_b = Tensor<S>::zeros({d}).set_requires_grad(true);
    b.sq = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.sk = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.sv = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.so = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.ln2_g = Tensor<S>::full({d}, S(1)).set_requires_grad(true);
    b.ln2_b = Tensor<S>::zeros({d}).set_requires_grad(true);
    b.cq = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.ck = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.cv = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.co = trunc_normal<S>({d, d}, 0.02, rng).set_requires_grad(true);
    b.ln3_g = Tensor<S>::full({d}, S(1)).set_requires_grad(true);
    b.ln3_b = Tensor<S>::zeros({d}).set_requires_grad(true);
    b.fc1_w = trunc_normal<S>({cfg.ffn_dim, d}, 0.02, rng).set_requires_grad(true);
    b.fc1_b = Tensor<S>::zeros({cfg.ffn_dim}).set_requires_grad(true);
    b.fc2_w = trunc_normal<S>({d, cfg.ffn_dim}, 0.02, rng).set_requires_grad(true);
    b.fc2_b = Tensor<S>::zeros({d}).set_requires_grad(true);
  }
  final_g = Tensor<S>::full({d}, S(1)).set_requires_grad(true);
  final_b = Tensor<S>::zeros({d}).set_requires_grad(true);
  out_w = trunc_normal<S>({cfg.vocab, d}, 0.02, rng).set_requires_grad(true);
  out_b = Tensor<S>::zeros({cfg.vocab}).set_requires_grad(true);
}

template <class S>
Tensor<S> Decoder<S>::forward(const Tensor<S>& memory, const std::vector<i64>& ids) const {
  if (!memory.valid() || memory.rank() != 2 || memory.cols() != cfg.model_dim)
    throw ShapeError("decoder: memory must be [tokens, model_dim]");
  i64 len = static_cast<i64>(ids.size());
  if (len < 1) throw ShapeError("decoder: empty token sequence");
  if (len > cfg.max_len)
    throw ShapeError("decoder: sequence length " + std::to_string(len) + " exceeds max_len " +
                     std::to_string(cfg.max_len));
  for (i64 id : ids)
    if (id < 0 || id >= cfg.vocab)
      throw ShapeError("decoder: vocab id " + std::to_string(id) + " out of range");
  S root = static_cast<S>(std::sqrt(static_cast<double>(cfg.model_dim)));
  Tensor<S> x = scale(embedding(embed_w, ids), root);
  x = add(x, block(pos, 0, len, 0, cfg.model_dim));
  Tensor<S> cmask = causal_mask<S>(len);
  for (const DecoderBlock<S>& b : blocks) {
    Tensor<S> h = layernorm(x, b.ln1_g, b.ln1_b);
    x = add(x, attend(h, h, b.sq, b.sk, b.sv, b.so, cfg.heads, cmask));
    h = layernorm(x, b.ln2_g, b.ln2_b);
    x = add(x, attend(h, memory, b.cq, b.ck, b.cv, b.co, cfg.heads, Tensor<S>()));
    h = layernorm(x, b.ln3_g, b.ln3_b);
    h = add_bias(matmul_nt(h, b.fc1_w), b.fc1_b);
    h = gelu(h);
    h = add_bias(matmul_nt(h, b.fc2_w), b.fc2_b);
    x = add(x, h);
  }
  x = layernorm(x, final_g, final_b);
  return add_bias(matmul_nt(x, out_w), out_b);
}

template <class S>
std::vector<i64> Decoder<S>::greedy(const Tensor<S>& memory) const {
  NoGradGuard ng;
  std::vector<i64> seq{kBos};
  while (static_cast<i64>(seq.size()) < cfg.max_len) {
    Tensor<S> logits = forward(memory, seq);
    const S* last = logits.data() + (seq.size() - 1) * static_cast<size_t>(cfg.vocab);
    i64 next = argmax_row(last, cfg.vocab);
    if (next == kEos) break;
    seq.push_back(next);
  }
  return {seq.begin() + 1, seq.end()};
}

template <class S>
void Decoder<S>::collect(const std::string& prefix,
                         std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  out.emplace_back(prefix + ".embed", embed_w);
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect(prefix + ".b" + std::to_string(i), out);
  out.emplace_back(prefix + ".final_g", final_g);
  out.emplace_back(prefix + ".final_b", final_b);
  out.emplace_back(prefix + ".out_w", out_w);
  out.emplace_back(prefix + ".out_b", out_b);
}

template <class S>
u64 Decoder<S>::param_count() const {
  std::vector<std::pair<std::string, Tensor<S>>> all;
  collect("d", all);
  u64 n = 0;
  for (const auto& [name, t] : all) n += static_cast<u64>(t.numel());
  return n;
}

#define SWINCAP_INSTANTIATE_DECODER(S)          \
  template struct DecoderBlock<S>;              \
  template struct Decoder<S>;                   \
  template Tensor<S> sinusoid_table<S>(i64, i64);

SWINCAP_INSTANTIATE_DECODER(float)
SWINCAP_INSTANTIATE_DECODER(double)

}  // namespace swincap
