#pragma once

#include "swincap/common.hpp"

namespace swincap::kernels {

/// Selects between the serial loop drivers and the OpenMP ones. Both drivers
/// invoke the same per-row kernels, and parallelism only ever splits
/// independent output elements, so results are bit-identical in either mode.
/// Defaults to parallel when compiled with OpenMP.
bool parallel_enabled();
void set_parallel(bool on);

/// C[m,n] = A[m,k] * B[k,n], or += when `accumulate`. Per output element the
/// reduction runs in ascending k order.
template <class S>
void matmul_nn(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate = false);

/// C[m,n] = A[m,k] * B^T with B stored as [n,k].
template <class S>
void matmul_nt(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate = false);

/// C[k,n] = A^T * B with A stored as [m,k], B as [m,n]. The reduction over m
/// runs in ascending order.
template <class S>
void matmul_tn(const S* a, const S* b, S* c, i64 m, i64 k, i64 n, bool accumulate = false);

/// out[w,j,c] = sum_k weights[head(c),j,k] * x[w,k,c] + bias[head(c),j]
/// x, out: [nwin, s, channels]; weights: [heads, s, s]; bias: [heads, s].
/// head(c) = c / (channels / heads).
template <class S>
void grouped_mix_fwd(const S* x, const S* weights, const S* bias, S* out, i64 nwin, i64 s,
                     i64 channels, i64 heads);

/// dx[w,k,c] += sum_j weights[head(c),j,k] * gout[w,j,c]
template <class S>
void grouped_mix_bwd_x(const S* gout, const S* weights, S* dx, i64 nwin, i64 s, i64 channels,
                       i64 heads);

/// dweights[i,j,k] += sum_w sum_{c in head i} x[w,k,c] * gout[w,j,c]
/// dbias[i,j]      += sum_w sum_{c in head i} gout[w,j,c]
template <class S>
void grouped_mix_bwd_w(const S* x, const S* gout, S* dweights, S* dbias, i64 nwin, i64 s,
                       i64 channels, i64 heads);

}  // namespace swincap::kernels
