#pragma once

#include <vector>

#include "swincap/rng.hpp"
#include "swincap/tensor.hpp"

namespace swincap {

/// Token lattice. Images use t=1; video clips use the temporal extent after
/// patching. Tokens are stored row-major as (t*h + y)*w + x.
struct Grid {
  i64 t = 1;
  i64 h = 0;
  i64 w = 0;
  i64 tokens() const { return t * h * w; }
  bool operator==(const Grid&) const = default;
};

/// Window extent per axis. 2-D windows use t=1.
struct Window3 {
  i64 t = 1;
  i64 h = 0;
  i64 w = 0;
  i64 tokens() const { return t * h * w; }
  bool operator==(const Window3&) const = default;
};

/// Shrinks each window axis to the grid extent when the grid is smaller.
Window3 clamp_window(const Window3& m, const Grid& g);

/// out[(t,y,x)] = in[(t-dt, y-dy, x-dx) mod grid]; positive deltas move
/// content toward larger coordinates.
std::vector<i64> roll_indices(const Grid& g, i64 dt, i64 dy, i64 dx);

/// Flattens windows row-major over window origins, row-major within each
/// window: result[win*m.tokens() + inner] = source token index. Requires the
/// window to tile the grid exactly.
std::vector<i64> window_partition_indices(const Grid& g, const Window3& m);

std::vector<i64> invert_permutation(const std::vector<i64>& idx);

template <class S>
Tensor<S> window_partition(const Tensor<S>& x, const Grid& g, const Window3& m);
template <class S>
Tensor<S> window_reverse(const Tensor<S>& x, const Grid& g, const Window3& m);
template <class S>
Tensor<S> cyclic_shift(const Tensor<S>& x, const Grid& g, i64 dt, i64 dy, i64 dx);

/// Additive attention mask for shifted windows: [windows, m.tokens(),
/// m.tokens()], 0 where two positions came from the same pre-shift region and
/// -1e9 where they did not.
template <class S>
Tensor<S> shift_attn_mask(const Grid& g, const Window3& m, i64 st, i64 sy, i64 sx);

/// Rolls non-overlapping patches into rows: [patches, cin*pt*ph*pw], values
/// ordered channel-major then (dt, dy, dx) row-major within the patch,
/// patches row-major over their origins. raw holds [cin, t, h, w] planes.
template <class S>
Tensor<S> extract_patches(const std::vector<S>& raw, i64 cin, i64 t, i64 h, i64 w, i64 pt, i64 ph,
                          i64 pw);

/// Linear patch projection with bias followed by layernorm.
template <class S>
struct PatchEmbed {
  i64 cin, pt, ph, pw, dim;
  Tensor<S> weight;  // [dim, cin*pt*ph*pw]
  Tensor<S> bias, gamma, beta;

  PatchEmbed(i64 cin, i64 pt, i64 ph, i64 pw, i64 dim, SplitMix64& rng);
  /// raw holds [cin, t, h, w]; images pass t=1.
  Tensor<S> forward(const std::vector<S>& raw, i64 t, i64 h, i64 w, Grid* out_grid) const;
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
};

/// 2x2 spatial downsampling: gathers the four parity cells in the order
/// (even,even), (odd,even), (even,odd), (odd,odd), concatenates channels,
/// normalizes, then projects 4C -> 2C. Video grids merge each time slice.
template <class S>
struct PatchMerge {
  i64 dim;           // incoming channels C
  Tensor<S> weight;  // [2C, 4C]
  Tensor<S> gamma, beta;
  bool apply_norm = true;

  PatchMerge(i64 dim, SplitMix64& rng);
  Tensor<S> forward(const Tensor<S>& x, const Grid& g, Grid* out_grid) const;
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor<S>>>& out) const;
};

}  // namespace swincap
