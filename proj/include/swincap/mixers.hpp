#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swincap/patching.hpp"
#include "swincap/rng.hpp"
#include "swincap/tensor.hpp"

namespace swincap {

enum class MixerKind { w_mlp, w_msa, global_msa, pool };

MixerKind mixer_kind_from_string(const std::string& s);
std::string to_string(MixerKind k);

/// The token-mixing sub-layer applied per window: a per-head spatial MLP, a
/// per-window multi-head attention, full-grid attention, or neighborhood
/// pooling. Input and output are [windows, tokens, channels].
template <class S>
struct Mixer {
  MixerKind kind = MixerKind::w_mlp;
  i64 channels = 0;
  i64 heads = 1;
  i64 tokens = 0;  // per-window token count the parameters are built for

  Tensor<S> mix_w, mix_b;          // w_mlp: [heads, tokens, tokens], [heads, tokens]
  Tensor<S> wq, wk, wv, wo;        // attention: [C, C] each, stored [out, in]
  Tensor<S> pool_w, pool_b;        // pool: fixed neighborhood-average weights

  static Mixer make_wmlp(i64 channels, i64 heads, i64 tokens, SplitMix64& rng);
  static Mixer make_wmsa(i64 channels, i64 heads, SplitMix64& rng);
  static Mixer make_global(i64 channels, i64 heads, SplitMix64& rng);
  /// Pooling mixes a k x k spatial neighborhood inside each window slice and
  /// subtracts the center token. No learned parameters.
  static Mixer make_pool(i64 channels, const Window3& win, i64 k);

  Tensor<S> forward(const Tensor<S>& wins) const;
  /// Attention kinds accept an additive score mask [windows, tokens, tokens]
  /// shared across heads; other kinds reject it.
  Tensor<S> forward(const Tensor<S>& wins, const Tensor<S>& mask) const;

  u64 param_count() const;
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
};

/// Full-grid attention over [N, C] tokens, the single-window special case.
template <class S>
Tensor<S> global_msa(const Tensor<S>& tokens, const Mixer<S>& m);

}  // namespace swincap
