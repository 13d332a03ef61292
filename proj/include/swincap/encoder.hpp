#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swincap/mixers.hpp"
#include "swincap/patching.hpp"

namespace swincap {

struct EncoderSettings {
  MixerKind kind = MixerKind::w_mlp;
  i64 in_channels = 3;
  i64 embed_dim = 128;  // C
  i64 patch = 4;        // spatial patch side
  i64 patch_t = 1;      // temporal patch length (1 = image model)
  i64 window = 14;      // M
  i64 window_t = 1;     // P (video window depth)
  std::array<i64, 4> depths{2, 2, 6, 2};
  std::array<i64, 4> heads{4, 8, 16, 32};
  i64 out_dim = 512;
  bool clamp_window = true;  // shrink windows to the grid instead of erroring
  bool attn_mask = false;    // mask cross-region pairs in shifted attention
  i64 pool_k = 3;
  // input extent: frames x pixels; images use img_t = 1
  i64 img_t = 1;
  i64 img_h = 224;
  i64 img_w = 224;
};

/// Largest head count <= want that divides the channel dim.
i64 fit_heads(i64 want, i64 channels);

template <class S>
struct EncoderBlock {
  Mixer<S> mixer;
  Tensor<S> ln1_g, ln1_b, ln2_g, ln2_b;
  Tensor<S> fc1_w, fc1_b, fc2_w, fc2_b;  // C -> 4C -> C
  Grid grid;
  Window3 win;
  i64 st = 0, sy = 0, sx = 0;  // cyclic shift applied on shifted blocks
  bool shifted = false;
  Tensor<S> mask;  // optional additive score mask, only set when enabled

  Tensor<S> forward(const Tensor<S>& x) const;
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
};

template <class S>
struct EncoderStage {
  std::optional<PatchMerge<S>> merge;  // stages 1..3
  std::vector<EncoderBlock<S>> blocks;
};

/// Hierarchical 4-stage encoder: patch embedding, stages of mixer blocks with
/// 2x2 merging between them, then a linear head to out_dim. The same machinery
/// covers images (t = 1) and clips (3D patches and windows).
template <class S>
struct Encoder {
  EncoderSettings cfg;
  PatchEmbed<S> embed;
  std::array<Grid, 4> stage_grids;       // grid while stage i's blocks run
  std::array<Window3, 4> stage_windows;  // effective (possibly clamped) window
  std::vector<EncoderStage<S>> stages;
  Tensor<S> head_w, head_b;  // [out_dim, 8C], [out_dim]

  Encoder(const EncoderSettings& cfg, SplitMix64& rng);

  /// raw: [in_channels, img_t, img_h, img_w] planes. Returns [L, out_dim].
  Tensor<S> encode(const std::vector<S>& raw) const;
  /// Runs stage i (merge for i >= 1, then its blocks).
  Tensor<S> run_stage(i64 i, const Tensor<S>& x) const;
  /// Memory row count the decoder will see.
  i64 memory_tokens() const { return stage_grids[3].tokens(); }

  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
  u64 param_count() const;
};

}  // namespace swincap
