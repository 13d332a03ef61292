#include "swincap/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace swincap::kernels {

namespace {

#ifdef _OPENMP
bool g_parallel = true;
#else
bool g_parallel = false;
#endif

// Row kernels shared by the serial and parallel drivers. Keeping one body
// per row guarantees the two modes produce identical bits.

// c_row[n] (+)= a_row[k] * B[k,n]
template <class S>
inline void row_nn(const S* a_row, const S* b, S* c_row, i64 k, i64 n, bool accumulate) {
  if (!accumulate) {
    for (i64 j = 0; j < n; ++j) c_row[j] = S(0);
  }
  for (i64 kk = 0; kk < k; ++kk) {
    const S av = a_row[kk];
    const S* b_row = b + kk * n;
    for (i64 j = 0; j < n; ++j) c_row[j] += av * b_row[j];
  }
}

// c_row[n] (+)= a_row[k] dot rows of B[n,k]. The reduction runs in 16
// interleaved lanes (kk mod 16) combined in a fixed tree; one scalar chain
// cannot keep the FMA pipeline full. Deterministic, but not ascending-k.
template <class S>
inline void row_nt(const S* a_row, const S* b, S* c_row, i64 k, i64 n, bool accumulate) {
  for (i64 j = 0; j < n; ++j) {
    const S* b_row = b + j * k;
    S lane[16] = {};
    i64 kk = 0;
    for (; kk + 16 <= k; kk += 16)
      for (i64 l = 0; l < 16; ++l) lane[l] += a_row[kk + l] * b_row[kk + l];
    S tail = S(0);
    for (; kk < k; ++kk) tail += a_row[kk] * b_row[kk];
    S even = ((lane[0] + lane[8]) + (lane[2] + lane[10])) +
             ((lane[4] + lane[12]) + (lane[6] + lane[14]));
    S odd = ((lane[1] + lane[9]) + (lane[3] + lane[11])) +
            ((lane[5] + lane[13]) + (lane[7] + lane[15]));
    S acc = (even + odd) + tail;
    c_row[j] = accumulate ? c_row[j] + acc : acc;
  }
}

template <class S>
inline void gmix_row_fwd(const S* xw, const S* weights, const S* bias, S* ow, i64 s, i64 channels,
                         i64 heads, i64 head_dim) {
  // xw/ow: one window, [s, channels]
  for (i64 h = 0; h < heads; ++h) {
    const S* wm = weights + h * s * s;
    const i64 c0 = h * head_dim;
    for (i64 j = 0; j < s; ++j) {
      S* orow = ow + j * channels + c0;
      const S bj = bias[h * s + j];
      for (i64 c = 0; c < head_dim; ++c) orow[c] = bj;
      const S* wrow = wm + j * s;
      for (i64 kk = 0; kk < s; ++kk) {
        const S wv = wrow[kk];
        const S* xrow = xw + kk * channels + c0;
        for (i64 c = 0; c < head_dim; ++c) orow[c] += wv * xrow[c];
      }
    }
  }
}

template <class S>
inline void gmix_row_bwd_x(const S* gw, const S* weights, S* dxw, i64 s, i64 channels, i64 heads,
                           i64 head_dim) {
  for (i64 h = 0; h < heads; ++h) {
    const S* wm = weights + h * s * s;
    const i64 c0 = h * head_dim;
    for (i64 kk = 0; kk < s; ++kk) {
      S* drow = dxw + kk * channels + c0;
      for (i64 j = 0; j < s; ++j) {
        const S wv = wm[j * s + kk];
        const S* grow = gw + j * channels + c0;
        for (i64 c = 0; c < head_dim; ++c) drow[c] += wv * grow[c];
      }
    }
  }
}

}  // namespace

bool parallel_enabled() { return g_parallel; }

void set_parallel(bool on) {
#ifdef _OPENMP
  g_parallel = on;
#else
  g_parallel = false;
  (void)on;
#endif
}

template <class S>
void matmul_nn(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate) {
  if (g_parallel) {
#pragma omp parallel for schedule(static)
    for (i64 i = 0; i < m; ++i) row_nn(a + i * k, b, c + i * n, k, n, accumulate);
  } else {
    for (i64 i = 0; i < m; ++i) row_nn(a + i * k, b, c + i * n, k, n, accumulate);
  }
}

template <class S>
void matmul_nt(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate) {
  if (g_parallel) {
#pragma omp parallel for schedule(static)
    for (i64 i = 0; i < m; ++i) row_nt(a + i * k, b, c + i * n, k, n, accumulate);
  } else {
    for (i64 i = 0; i < m; ++i) row_nt(a + i * k, b, c + i * n, k, n, accumulate);
  }
}

template <class S>
void matmul_tn(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate) {
  // Output rows are indexed by k. Each element reduces over m in ascending
  // order; threads own disjoint output rows.
  if (!accumulate) std::memset(c, 0, sizeof(S) * static_cast<size_t>(k * n));
  if (g_parallel) {
#pragma omp parallel for schedule(static)
    for (i64 kk = 0; kk < k; ++kk) {
      S* c_row = c + kk * n;
      for (i64 i = 0; i < m; ++i) {
        const S av = a[i * k + kk];
        const S* b_row = b + i * n;
        for (i64 j = 0; j < n; ++j) c_row[j] += av * b_row[j];
      }
    }
  } else {
    for (i64 kk = 0; kk < k; ++kk) {
      S* c_row = c + kk * n;
      for (i64 i = 0; i < m; ++i) {
        const S av = a[i * k + kk];
        const S* b_row = b + i * n;
        for (i64 j = 0; j < n; ++j) c_row[j] += av * b_row[j];
      }
    }
  }
}

template <class S>
void grouped_mix_fwd(const S* x, const S* weights, const S* bias, S* out, i64 nwin, i64 s,
                     i64 channels, i64 heads) {
  const i64 head_dim = channels / heads;
  const i64 stride = s * channels;
  if (g_parallel) {
#pragma omp parallel for schedule(static)
    for (i64 w = 0; w < nwin; ++w)
      gmix_row_fwd(x + w * stride, weights, bias, out + w * stride, s, channels, heads, head_dim);
  } else {
    for (i64 w = 0; w < nwin; ++w)
      gmix_row_fwd(x + w * stride, weights, bias, out + w * stride, s, channels, heads, head_dim);
  }
}

template <class S>
void grouped_mix_bwd_x(const S* gout, const S* weights, S* dx, i64 nwin, i64 s, i64 channels,
                       i64 heads) {
  const i64 head_dim = channels / heads;
  const i64 stride = s * channels;
  if (g_parallel) {
#pragma omp parallel for schedule(static)
    for (i64 w = 0; w < nwin; ++w)
      gmix_row_bwd_x(gout + w * stride, weights, dx + w * stride, s, channels, heads, head_dim);
  } else {
    for (i64 w = 0; w < nwin; ++w)
      gmix_row_bwd_x(gout + w * stride, weights, dx + w * stride, s, channels, heads, head_dim);
  }
}

template <class S>
void grouped_mix_bwd_w(const S* x, const S* gout, S* dweights, S* dbias, i64 nwin, i64 s,
                       i64 channels, i64 heads) {
  const i64 head_dim = channels / heads;
  const i64 stride = s * channels;
  // Reductions run over windows then channels in ascending order. Threads
  // own disjoint (head, j) slices of the weight gradient.
  if (g_parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 h = 0; h < heads; ++h) {
      for (i64 j = 0; j < s; ++j) {
        const i64 c0 = h * head_dim;
        S* dwrow = dweights + (h * s + j) * s;
        S db = S(0);
        for (i64 w = 0; w < nwin; ++w) {
          const S* grow = gout + w * stride + j * channels + c0;
          for (i64 kk = 0; kk < s; ++kk) {
            const S* xrow = x + w * stride + kk * channels + c0;
            S acc = S(0);
            for (i64 c = 0; c < head_dim; ++c) acc += xrow[c] * grow[c];
            dwrow[kk] += acc;
          }
          for (i64 c = 0; c < head_dim; ++c) db += grow[c];
        }
        dbias[h * s + j] += db;
      }
    }
  } else {
    for (i64 h = 0; h < heads; ++h) {
      for (i64 j = 0; j < s; ++j) {
        const i64 c0 = h * head_dim;
        S* dwrow = dweights + (h * s + j) * s;
        S db = S(0);
        for (i64 w = 0; w < nwin; ++w) {
          const S* grow = gout + w * stride + j * channels + c0;
          for (i64 kk = 0; kk < s; ++kk) {
            const S* xrow = x + w * stride + kk * channels + c0;
            S acc = S(0);
            for (i64 c = 0; c < head_dim; ++c) acc += xrow[c] * grow[c];
            dwrow[kk] += acc;
          }
          for (i64 c = 0; c < head_dim; ++c) db += grow[c];
        }
        dbias[h * s + j] += db;
      }
    }
  }
}

#define SWINCAP_INSTANTIATE_KERNELS(S)                                                     \
  template void matmul_nn<S>(const S*, const S*, S*, i64, i64, i64, bool);                 \
  template void matmul_nt<S>(const S*, const S*, S*, i64, i64, i64, bool);                 \
  template void matmul_tn<S>(const S*, const S*, S*, i64, i64, i64, bool);                 \
  template void grouped_mix_fwd<S>(const S*, const S*, const S*, S*, i64, i64, i64, i64); \
  template void grouped_mix_bwd_x<S>(const S*, const S*, S*, i64, i64, i64, i64);          \
  template void grouped_mix_bwd_w<S>(const S*, const S*, S*, S*, i64, i64, i64, i64);

SWINCAP_INSTANTIATE_KERNELS(float)
SWINCAP_INSTANTIATE_KERNELS(double)

}  // namespace swincap::kernels
