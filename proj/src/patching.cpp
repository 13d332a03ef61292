#include "swincap/patching.hpp"

#include <string>

namespace swincap {

namespace {

i64 wrap(i64 v, i64 d) { return ((v % d) + d) % d; }

void require_divisible(i64 dim, i64 part, const char* what) {
  if (part <= 0 || dim % part != 0)
    throw ConfigError(std::string(what) + ": " + std::to_string(part) + " does not tile extent " +
                      std::to_string(dim));
}

}  // namespace

Window3 clamp_window(const Window3& m, const Grid& g) {
  return Window3{std::min(m.t, g.t), std::min(m.h, g.h), std::min(m.w, g.w)};
}

std::vector<i64> roll_indices(const Grid& g, i64 dt, i64 dy, i64 dx) {
  std::vector<i64> idx;
  idx.reserve(static_cast<size_t>(g.tokens()));
  for (i64 t = 0; t < g.t; ++t)
    for (i64 y = 0; y < g.h; ++y)
      for (i64 x = 0; x < g.w; ++x) {
        const i64 st = wrap(t - dt, g.t);
        const i64 sy = wrap(y - dy, g.h);
        const i64 sx = wrap(x - dx, g.w);
        idx.push_back((st * g.h + sy) * g.w + sx);
      }
  return idx;
}

std::vector<i64> window_partition_indices(const Grid& g, const Window3& m) {
  require_divisible(g.t, m.t, "window_partition: temporal window");
  require_divisible(g.h, m.h, "window_partition: window height");
  require_divisible(g.w, m.w, "window_partition: window width");
  const i64 nt = g.t / m.t, nh = g.h / m.h, nw = g.w / m.w;
  std::vector<i64> idx;
  idx.reserve(static_cast<size_t>(g.tokens()));
  for (i64 wt = 0; wt < nt; ++wt)
    for (i64 wy = 0; wy < nh; ++wy)
      for (i64 wx = 0; wx < nw; ++wx)
        for (i64 it = 0; it < m.t; ++it)
          for (i64 iy = 0; iy < m.h; ++iy)
            for (i64 ix = 0; ix < m.w; ++ix) {
              const i64 t = wt * m.t + it;
              const i64 y = wy * m.h + iy;
              const i64 x = wx * m.w + ix;
              idx.push_back((t * g.h + y) * g.w + x);
            }
  return idx;
}

std::vector<i64> invert_permutation(const std::vector<i64>& idx) {
  std::vector<i64> inv(idx.size(), -1);
  for (size_t i = 0; i < idx.size(); ++i) {
    const i64 v = idx[i];
    if (v < 0 || v >= static_cast<i64>(idx.size()) || inv[static_cast<size_t>(v)] != -1)
      throw ShapeError("invert_permutation: input is not a permutation");
    inv[static_cast<size_t>(v)] = static_cast<i64>(i);
  }
  return inv;
}

template <class S>
Tensor<S> window_partition(const Tensor<S>& x, const Grid& g, const Window3& m) {
  if (x.rows() != g.tokens())
    throw ShapeError("window_partition: " + std::to_string(x.rows()) + " rows for a grid of " +
                     std::to_string(g.tokens()) + " tokens");
  auto idx = window_partition_indices(g, m);
  const i64 nwin = g.tokens() / m.tokens();
  return reshape(permute_rows(x, idx), {nwin, m.tokens(), x.cols()});
}

template <class S>
Tensor<S> window_reverse(const Tensor<S>& x, const Grid& g, const Window3& m) {
  if (x.rows() != g.tokens())
    throw ShapeError("window_reverse: " + std::to_string(x.rows()) + " rows for a grid of " +
                     std::to_string(g.tokens()) + " tokens");
  return permute_rows(x, invert_permutation(window_partition_indices(g, m)));
}

template <class S>
Tensor<S> cyclic_shift(const Tensor<S>& x, const Grid& g, i64 dt, i64 dy, i64 dx) {
  if (x.rows() != g.tokens())
    throw ShapeError("cyclic_shift: " + std::to_string(x.rows()) + " rows for a grid of " +
                     std::to_string(g.tokens()) + " tokens");
  return permute_rows(x, roll_indices(g, dt, dy, dx));
}

template <class S>
Tensor<S> shift_attn_mask(const Grid& g, const Window3& m, i64 st, i64 sy, i64 sx) {
  // region labels follow the pre-shift slicing (0, d-m), (d-m, d-s), (d-s, d);
  // tokens from different regions land in the same window only through the
  // cyclic wrap and get masked out
  auto axis_label = [](i64 v, i64 d, i64 mm, i64 s) -> i64 {
    if (v < d - mm) return 0;
    if (v < d - s) return 1;
    return 2;
  };
  std::vector<i64> label;
  label.reserve(static_cast<size_t>(g.tokens()));
  for (i64 t = 0; t < g.t; ++t)
    for (i64 y = 0; y < g.h; ++y)
      for (i64 x = 0; x < g.w; ++x)
        label.push_back((axis_label(t, g.t, m.t, st) * 3 + axis_label(y, g.h, m.h, sy)) * 3 +
                        axis_label(x, g.w, m.w, sx));

  auto idx = window_partition_indices(g, m);
  const i64 s = m.tokens();
  const i64 nwin = g.tokens() / s;
  std::vector<S> mask(static_cast<size_t>(nwin * s * s), S(0));
  for (i64 w = 0; w < nwin; ++w)
    for (i64 i = 0; i < s; ++i) {
      const i64 li = label[static_cast<size_t>(idx[static_cast<size_t>(w * s + i)])];
      for (i64 j = 0; j < s; ++j) {
        const i64 lj = label[static_cast<size_t>(idx[static_cast<size_t>(w * s + j)])];
        if (li != lj) mask[static_cast<size_t>((w * s + i) * s + j)] = S(-1e9);
      }
    }
  return Tensor<S>::from_data({nwin, s, s}, std::move(mask));
}

template <class S>
Tensor<S> extract_patches(const std::vector<S>& raw, i64 cin, i64 t, i64 h, i64 w, i64 pt, i64 ph,
                          i64 pw) {
  require_divisible(t, pt, "patch_embed: temporal patch");
  require_divisible(h, ph, "patch_embed: patch height");
  require_divisible(w, pw, "patch_embed: patch width");
  if (static_cast<i64>(raw.size()) != cin * t * h * w)
    throw ShapeError("extract_patches: " + std::to_string(raw.size()) + " values for " +
                     std::to_string(cin * t * h * w) + " expected");
  const i64 nt = t / pt, nh = h / ph, nw = w / pw;
  const i64 cols = cin * pt * ph * pw;
  std::vector<S> out;
  out.reserve(static_cast<size_t>(nt * nh * nw * cols));
  for (i64 ti = 0; ti < nt; ++ti)
    for (i64 yi = 0; yi < nh; ++yi)
      for (i64 xi = 0; xi < nw; ++xi)
        for (i64 c = 0; c < cin; ++c)
          for (i64 dt = 0; dt < pt; ++dt)
            for (i64 dy = 0; dy < ph; ++dy)
              for (i64 dx = 0; dx < pw; ++dx)
                out.push_back(raw[static_cast<size_t>(
                    ((c * t + ti * pt + dt) * h + yi * ph + dy) * w + xi * pw + dx)]);
  return Tensor<S>::from_data({nt * nh * nw, cols}, std::move(out));
}

template <class S>
PatchEmbed<S>::PatchEmbed(i64 cin_, i64 pt_, i64 ph_, i64 pw_, i64 dim_, SplitMix64& rng)
    : cin(cin_), pt(pt_), ph(ph_), pw(pw_), dim(dim_) {
  if (cin <= 0 || pt <= 0 || ph <= 0 || pw <= 0 || dim <= 0)
    throw ConfigError("patch_embed: all dims must be positive");
  weight = trunc_normal<S>({dim, cin * pt * ph * pw}, 0.02, rng);
  bias = Tensor<S>::zeros({dim});
  gamma = Tensor<S>::full({dim}, S(1));
  beta = Tensor<S>::zeros({dim});
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
  gamma.set_requires_grad(true);
  beta.set_requires_grad(true);
}

template <class S>
Tensor<S> PatchEmbed<S>::forward(const std::vector<S>& raw, i64 t, i64 h, i64 w,
                                 Grid* out_grid) const {
  auto patches = extract_patches<S>(raw, cin, t, h, w, pt, ph, pw);
  auto x = layernorm(add_bias(matmul_nt(patches, weight), bias), gamma, beta);
  if (out_grid) *out_grid = Grid{t / pt, h / ph, w / pw};
  return x;
}

template <class S>
void PatchEmbed<S>::collect(const std::string& prefix,
                            std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".bias", bias);
  out.emplace_back(prefix + ".norm_g", gamma);
  out.emplace_back(prefix + ".norm_b", beta);
}

template <class S>
PatchMerge<S>::PatchMerge(i64 dim_, SplitMix64& rng) : dim(dim_) {
  weight = trunc_normal<S>({2 * dim, 4 * dim}, 0.02, rng);
  gamma = Tensor<S>::full({4 * dim}, S(1));
  beta = Tensor<S>::zeros({4 * dim});
  weight.set_requires_grad(true);
  gamma.set_requires_grad(true);
  beta.set_requires_grad(true);
}

template <class S>
Tensor<S> PatchMerge<S>::forward(const Tensor<S>& x, const Grid& g, Grid* out_grid) const {
  if (g.h % 2 != 0 || g.w % 2 != 0)
    throw ConfigError("patch_merge: grid " + std::to_string(g.h) + "x" + std::to_string(g.w) +
                      " is not even");
  if (x.rows() != g.tokens() || x.cols() != dim)
    throw ShapeError("patch_merge: tensor does not match grid/channels");
  const i64 oh = g.h / 2, ow = g.w / 2;
  const i64 n = g.t * oh * ow;
  // parity cells in the frozen order (0,0), (1,0), (0,1), (1,1)
  const i64 par[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  std::vector<Tensor<S>> parts;
  parts.reserve(4);
  for (auto& p : par) {
    std::vector<i64> idx;
    idx.reserve(static_cast<size_t>(n));
    for (i64 t = 0; t < g.t; ++t)
      for (i64 y = 0; y < oh; ++y)
        for (i64 xx = 0; xx < ow; ++xx)
          idx.push_back((t * g.h + 2 * y + p[0]) * g.w + 2 * xx + p[1]);
    parts.push_back(permute_rows(x, idx));
  }
  auto cat = concat_cols(parts);
  if (apply_norm) cat = layernorm(cat, gamma, beta);
  auto out = matmul_nt(cat, weight);
  if (out_grid) *out_grid = Grid{g.t, oh, ow};
  return out;
}

template <class S>
void PatchMerge<S>::collect(const std::string& prefix,
                            std::vector<std::pair<std::string, Tensor<S>>>& out) const {
  out.emplace_back(prefix + ".weight", weight);
  out.emplace_back(prefix + ".norm_g", gamma);
  out.emplace_back(prefix + ".norm_b", beta);
}

#define SWINCAP_INSTANTIATE_PATCHING(S)                                                      \
  template Tensor<S> window_partition<S>(const Tensor<S>&, const Grid&, const Window3&);     \
  template Tensor<S> window_reverse<S>(const Tensor<S>&, const Grid&, const Window3&);       \
  template Tensor<S> cyclic_shift<S>(const Tensor<S>&, const Grid&, i64, i64, i64);          \
  template Tensor<S> shift_attn_mask<S>(const Grid&, const Window3&, i64, i64, i64);         \
  template Tensor<S> extract_patches<S>(const std::vector<S>&, i64, i64, i64, i64, i64, i64, \
                                        i64);                                                \
  template struct PatchEmbed<S>;                                                             \
  template struct PatchMerge<S>

SWINCAP_INSTANTIATE_PATCHING(float);
SWINCAP_INSTANTIATE_PATCHING(double);

}  // namespace swincap
