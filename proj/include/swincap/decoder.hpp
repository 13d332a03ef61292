#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swincap/rng.hpp"
#include "swincap/tensor.hpp"

namespace swincap {

// Reserved vocabulary ids shared across tokenizer, decoder and trainer.
inline constexpr i64 kBos = 0;
inline constexpr i64 kEos = 1;
inline constexpr i64 kPad = 2;
inline constexpr i64 kUnk = 3;

struct DecoderSettings {
  i64 blocks = 6;
  i64 model_dim = 512;
  i64 heads = 8;
  i64 ffn_dim = 2048;
  i64 max_len = 32;  // caps the token sequence fed to forward()
  i64 vocab = 0;
};

template <class S>
struct DecoderBlock {
  Tensor<S> ln1_g, ln1_b, sq, sk, sv, so;  // masked self-attention
  Tensor<S> ln2_g, ln2_b, cq, ck, cv, co;  // cross-attention over memory
  Tensor<S> ln3_g, ln3_b, fc1_w, fc1_b, fc2_w, fc2_b;

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
};

/// Autoregressive caption decoder: token embedding scaled by sqrt(d) plus a
/// fixed sinusoidal position signal, pre-norm blocks of causal self-attention,
/// cross-attention and a feed-forward net, then a linear map to the vocabulary.
template <class S>
struct Decoder {
  DecoderSettings cfg;
  Tensor<S> embed_w;           // [vocab, model_dim]
  Tensor<S> pos;               // [max_len, model_dim], fixed
  std::vector<DecoderBlock<S>> blocks;
  Tensor<S> final_g, final_b;
  Tensor<S> out_w, out_b;      // [vocab, model_dim], [vocab]

  Decoder(const DecoderSettings& cfg, SplitMix64& rng);

  /// memory: [L, model_dim]; ids: tokens seen so far, starting with bos.
  /// Returns next-token logits per position, [len(ids), vocab].
  Tensor<S> forward(const Tensor<S>& memory, const std::vector<i64>& ids) const;

  /// Greedy decode: repeatedly appends the argmax token (lowest id on ties)
  /// until eos or the length cap. The result excludes bos and eos.
  std::vector<i64> greedy(const Tensor<S>& memory) const;

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
  u64 param_count() const;
};

/// pos[p, 2i] = sin(p / 10000^(2i/d)), pos[p, 2i+1] = cos of the same angle.
template <class S>
Tensor<S> sinusoid_table(i64 len, i64 dim);

}  // namespace swincap
