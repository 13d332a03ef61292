#include "swincap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>
#include <utility>

#include "swincap/kernels.hpp"

namespace swincap {

MacCounter& MacCounter::instance() {
  static MacCounter c;
  return c;
}

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const std::vector<i64>& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ", ";
    r += std::to_string(s[i]);
  }
  r += "]";
  return r;
}

template <class S>
std::shared_ptr<Node<S>> make_leaf(std::vector<i64> shape) {
  const i64 n = shape_numel(shape);
  auto node = std::make_shared<Node<S>>();
  node->shape = std::move(shape);
  node->data = std::make_shared<std::vector<S>>(static_cast<size_t>(n), S(0));
  return node;
}

/// Allocates the output node of an op and wires parents when the tape is on.
/// backward_fn is attached by the caller only when requires_grad ends up set.
template <class S>
std::shared_ptr<Node<S>> make_result(std::vector<i64> shape,
                                     std::vector<std::shared_ptr<Node<S>>> parents) {
  auto node = make_leaf<S>(std::move(shape));
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p->requires_grad) {
        node->requires_grad = true;
        break;
      }
    }
    if (node->requires_grad) node->parents = std::move(parents);
  }
  return node;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

i64 shape_numel(const std::vector<i64>& shape) {
  i64 n = 1;
  for (i64 d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

template <class S>
Tensor<S> Tensor<S>::zeros(std::vector<i64> shape) {
  return Tensor<S>(make_leaf<S>(std::move(shape)));
}

template <class S>
Tensor<S> Tensor<S>::full(std::vector<i64> shape, S value) {
  auto node = make_leaf<S>(std::move(shape));
  std::fill(node->data->begin(), node->data->end(), value);
  return Tensor<S>(node);
}

template <class S>
Tensor<S> Tensor<S>::from_data(std::vector<i64> shape, std::vector<S> values) {
  const i64 n = shape_numel(shape);
  if (n != static_cast<i64>(values.size()))
    throw ShapeError("from_data: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(shape));
  auto node = std::make_shared<Node<S>>();
  node->shape = std::move(shape);
  node->data = std::make_shared<std::vector<S>>(std::move(values));
  return Tensor<S>(node);
}

template <class S>
Tensor<S> trunc_normal(std::vector<i64> shape, double std_dev, SplitMix64& rng) {
  auto t = Tensor<S>::zeros(std::move(shape));
  S* d = t.mutable_data();
  const i64 n = t.numel();
  for (i64 i = 0; i < n; ++i) d[i] = static_cast<S>(rng.next_trunc_normal(std_dev));
  return t;
}

template <class S>
Tensor<S> uniform(std::vector<i64> shape, double lo, double hi, SplitMix64& rng) {
  auto t = Tensor<S>::zeros(std::move(shape));
  S* d = t.mutable_data();
  const i64 n = t.numel();
  for (i64 i = 0; i < n; ++i) d[i] = static_cast<S>(lo + (hi - lo) * rng.next_double());
  return t;
}

// ---- matmul --------------------------------------------------------------

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const i64 m = a.rows(), k = a.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()));
  const i64 n = b.cols();
  std::vector<i64> out_shape(a.shape().begin(), a.shape().end());
  if (out_shape.empty()) out_shape.push_back(1);
  out_shape.back() = n;

  auto res = make_result<S>(std::move(out_shape), {a.node(), b.node()});
  kernels::matmul_nn(a.data(), b.data(), res->data->data(), m, k, n);
  MacCounter::instance().add(static_cast<u64>(m) * static_cast<u64>(k) * static_cast<u64>(n));

  if (res->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    res->backward_fn = [pa, pb, m, k, n](Node<S>& self) {
      const S* g = self.grad.data();
      if (pa->requires_grad) kernels::matmul_nt(g, pb->data->data(), pa->grad_acc(), m, n, k, true);
      if (pb->requires_grad) kernels::matmul_tn(pa->data->data(), g, pb->grad_acc(), m, k, n, true);
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b) {
  const i64 m = a.rows(), k = a.cols();
  if (b.cols() != k)
    throw ShapeError("matmul_nt: inner dims differ, " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()) + "^T");
  const i64 n = b.rows();
  std::vector<i64> out_shape(a.shape().begin(), a.shape().end());
  if (out_shape.empty()) out_shape.push_back(1);
  out_shape.back() = n;

  auto res = make_result<S>(std::move(out_shape), {a.node(), b.node()});
  kernels::matmul_nt(a.data(), b.data(), res->data->data(), m, k, n);
  MacCounter::instance().add(static_cast<u64>(m) * static_cast<u64>(k) * static_cast<u64>(n));

  if (res->requires_grad) {
    auto pa = a.node();
    auto pb = b.node();
    res->backward_fn = [pa, pb, m, k, n](Node<S>& self) {
      const S* g = self.grad.data();
      if (pa->requires_grad) kernels::matmul_nn(g, pb->data->data(), pa->grad_acc(), m, n, k, true);
      if (pb->requires_grad) kernels::matmul_tn(g, pa->data->data(), pb->grad_acc(), m, n, k, true);
    };
  }
  return Tensor<S>(res);
}

// ---- elementwise ----------------------------------------------------------

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  auto res = make_result<S>(a.shape(), {a.node(), b.node()});
  const S* pa = a.data();
  const S* pb = b.data();
  S* po = res->data->data();
  const i64 n = a.numel();
  for (i64 i = 0; i < n; ++i) po[i] = pa[i] + pb[i];

  if (res->requires_grad) {
    auto na = a.node();
    auto nb = b.node();
    res->backward_fn = [na, nb, n](Node<S>& self) {
      const S* g = self.grad.data();
      if (na->requires_grad) {
        S* d = na->grad_acc();
        for (i64 i = 0; i < n; ++i) d[i] += g[i];
      }
      if (nb->requires_grad) {
        S* d = nb->grad_acc();
        for (i64 i = 0; i < n; ++i) d[i] += g[i];
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  auto res = make_result<S>(a.shape(), {a.node(), b.node()});
  const S* pa = a.data();
  const S* pb = b.data();
  S* po = res->data->data();
  const i64 n = a.numel();
  for (i64 i = 0; i < n; ++i) po[i] = pa[i] * pb[i];

  if (res->requires_grad) {
    auto na = a.node();
    auto nb = b.node();
    res->backward_fn = [na, nb, n](Node<S>& self) {
      const S* g = self.grad.data();
      if (na->requires_grad) {
        S* d = na->grad_acc();
        const S* other = nb->data->data();
        for (i64 i = 0; i < n; ++i) d[i] += g[i] * other[i];
      }
      if (nb->requires_grad) {
        S* d = nb->grad_acc();
        const S* other = na->data->data();
        for (i64 i = 0; i < n; ++i) d[i] += g[i] * other[i];
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> scale(const Tensor<S>& x, S factor) {
  auto res = make_result<S>(x.shape(), {x.node()});
  const S* px = x.data();
  S* po = res->data->data();
  const i64 n = x.numel();
  for (i64 i = 0; i < n; ++i) po[i] = px[i] * factor;

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, factor, n](Node<S>& self) {
      const S* g = self.grad.data();
      S* d = nx->grad_acc();
      for (i64 i = 0; i < n; ++i) d[i] += g[i] * factor;
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias) {
  const i64 cols = x.cols();
  if (bias.numel() != cols)
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match trailing dim " +
                     std::to_string(cols));
  const i64 rows = x.rows();
  auto res = make_result<S>(x.shape(), {x.node(), bias.node()});
  const S* px = x.data();
  const S* pb = bias.data();
  S* po = res->data->data();
  for (i64 r = 0; r < rows; ++r)
    for (i64 d = 0; d < cols; ++d) po[r * cols + d] = px[r * cols + d] + pb[d];

  if (res->requires_grad) {
    auto nx = x.node();
    auto nb = bias.node();
    res->backward_fn = [nx, nb, rows, cols](Node<S>& self) {
      const S* g = self.grad.data();
      if (nx->requires_grad) {
        S* d = nx->grad_acc();
        const i64 n = rows * cols;
        for (i64 i = 0; i < n; ++i) d[i] += g[i];
      }
      if (nb->requires_grad) {
        S* d = nb->grad_acc();
        for (i64 r = 0; r < rows; ++r)
          for (i64 c = 0; c < cols; ++c) d[c] += g[r * cols + c];
      }
    };
  }
  return Tensor<S>(res);
}

// ---- normalization and activations ----------------------------------------

template <class S>
Tensor<S> layernorm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, S eps) {
  const i64 cols = x.cols();
  const i64 rows = x.rows();
  if (gamma.numel() != cols || beta.numel() != cols)
    throw ShapeError("layernorm: gamma/beta must have " + std::to_string(cols) + " elements");

  auto res = make_result<S>(x.shape(), {x.node(), gamma.node(), beta.node()});
  const S* px = x.data();
  const S* pg = gamma.data();
  const S* pb = beta.data();
  S* po = res->data->data();

  std::vector<S> xhat(static_cast<size_t>(rows * cols));
  std::vector<S> inv(static_cast<size_t>(rows));
  for (i64 r = 0; r < rows; ++r) {
    const S* row = px + r * cols;
    double mu = 0.0;
    for (i64 d = 0; d < cols; ++d) mu += row[d];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (i64 d = 0; d < cols; ++d) {
      const double t = row[d] - mu;
      var += t * t;
    }
    var /= static_cast<double>(cols);
    const S rinv = static_cast<S>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    inv[static_cast<size_t>(r)] = rinv;
    for (i64 d = 0; d < cols; ++d) {
      const S h = (row[d] - static_cast<S>(mu)) * rinv;
      xhat[static_cast<size_t>(r * cols + d)] = h;
      po[r * cols + d] = pg[d] * h + pb[d];
    }
  }
  MacCounter::instance().add_elementwise(static_cast<u64>(rows) * static_cast<u64>(cols));

  if (res->requires_grad) {
    auto nx = x.node();
    auto ng = gamma.node();
    auto nb = beta.node();
    res->backward_fn = [nx, ng, nb, rows, cols, xh = std::move(xhat),
                        iv = std::move(inv)](Node<S>& self) {
      const S* g = self.grad.data();
      const S* pgam = ng->data->data();
      S* dx = nx->requires_grad ? nx->grad_acc() : nullptr;
      S* dgam = ng->requires_grad ? ng->grad_acc() : nullptr;
      S* dbet = nb->requires_grad ? nb->grad_acc() : nullptr;
      for (i64 r = 0; r < rows; ++r) {
        const S* grow = g + r * cols;
        const S* hrow = xh.data() + r * cols;
        if (dgam)
          for (i64 d = 0; d < cols; ++d) dgam[d] += grow[d] * hrow[d];
        if (dbet)
          for (i64 d = 0; d < cols; ++d) dbet[d] += grow[d];
        if (dx) {
          double m1 = 0.0, m2 = 0.0;
          for (i64 d = 0; d < cols; ++d) {
            const double dh = static_cast<double>(grow[d]) * pgam[d];
            m1 += dh;
            m2 += dh * hrow[d];
          }
          m1 /= static_cast<double>(cols);
          m2 /= static_cast<double>(cols);
          const S rinv = iv[static_cast<size_t>(r)];
          for (i64 d = 0; d < cols; ++d) {
            const double dh = static_cast<double>(grow[d]) * pgam[d];
            dx[r * cols + d] += rinv * static_cast<S>(dh - m1 - hrow[d] * m2);
          }
        }
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> gelu(const Tensor<S>& x) {
  constexpr double kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kCubic = 0.044715;
  auto res = make_result<S>(x.shape(), {x.node()});
  const S* px = x.data();
  S* po = res->data->data();
  const i64 n = x.numel();
  std::vector<S> tanhs(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) {
    const double v = px[i];
    const double t = std::tanh(kAlpha * (v + kCubic * v * v * v));
    tanhs[static_cast<size_t>(i)] = static_cast<S>(t);
    po[i] = static_cast<S>(0.5 * v * (1.0 + t));
  }
  MacCounter::instance().add_elementwise(static_cast<u64>(n));

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, n, th = std::move(tanhs)](Node<S>& self) {
      const S* g = self.grad.data();
      const S* px2 = nx->data->data();
      S* d = nx->grad_acc();
      for (i64 i = 0; i < n; ++i) {
        const double v = px2[i];
        const double t = th[static_cast<size_t>(i)];
        const double du = kAlpha * (1.0 + 3.0 * kCubic * v * v);
        const double dv = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
        d[i] += g[i] * static_cast<S>(dv);
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> softmax(const Tensor<S>& x, i64 axis) {
  const i64 rank = x.rank();
  const i64 ax = axis < 0 ? rank + axis : axis;
  if (ax < 0 || ax >= rank)
    throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(x.shape()));
  i64 outer = 1, inner = 1;
  for (i64 i = 0; i < ax; ++i) outer *= x.dim(i);
  const i64 len = x.dim(ax);
  for (i64 i = ax + 1; i < rank; ++i) inner *= x.dim(i);

  auto res = make_result<S>(x.shape(), {x.node()});
  const S* px = x.data();
  S* po = res->data->data();
  for (i64 o = 0; o < outer; ++o) {
    for (i64 in = 0; in < inner; ++in) {
      const i64 base = o * len * inner + in;
      S mx = px[base];
      for (i64 a = 1; a < len; ++a) mx = std::max(mx, px[base + a * inner]);
      double z = 0.0;
      for (i64 a = 0; a < len; ++a) {
        const S e = static_cast<S>(std::exp(static_cast<double>(px[base + a * inner] - mx)));
        po[base + a * inner] = e;
        z += e;
      }
      const S rz = static_cast<S>(1.0 / z);
      for (i64 a = 0; a < len; ++a) po[base + a * inner] *= rz;
    }
  }
  MacCounter::instance().add_elementwise(static_cast<u64>(x.numel()));

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, outer, len, inner](Node<S>& self) {
      const S* g = self.grad.data();
      const S* y = self.data->data();
      S* d = nx->grad_acc();
      for (i64 o = 0; o < outer; ++o) {
        for (i64 in = 0; in < inner; ++in) {
          const i64 base = o * len * inner + in;
          double dot = 0.0;
          for (i64 a = 0; a < len; ++a) {
            const i64 at = base + a * inner;
            dot += static_cast<double>(g[at]) * y[at];
          }
          for (i64 a = 0; a < len; ++a) {
            const i64 at = base + a * inner;
            d[at] += y[at] * (g[at] - static_cast<S>(dot));
          }
        }
      }
    };
  }
  return Tensor<S>(res);
}

// ---- grouped spatial mix ---------------------------------------------------

template <class S>
Tensor<S> grouped_spatial_mix(const Tensor<S>& x, const Tensor<S>& weights, const Tensor<S>& bias) {
  if (x.rank() != 3)
    throw ShapeError("grouped_spatial_mix: x must be [windows, tokens, channels], got " +
                     shape_str(x.shape()));
  const i64 nwin = x.dim(0), s = x.dim(1), channels = x.dim(2);
  if (weights.rank() != 3 || weights.dim(1) != s || weights.dim(2) != s)
    throw ShapeError("grouped_spatial_mix: weights must be [heads, " + std::to_string(s) + ", " +
                     std::to_string(s) + "], got " + shape_str(weights.shape()));
  const i64 heads = weights.dim(0);
  if (bias.rank() != 2 || bias.dim(0) != heads || bias.dim(1) != s)
    throw ShapeError("grouped_spatial_mix: bias must be [" + std::to_string(heads) + ", " +
                     std::to_string(s) + "], got " + shape_str(bias.shape()));
  if (heads <= 0 || channels % heads != 0)
    throw ShapeError("grouped_spatial_mix: channels " + std::to_string(channels) +
                     " not divisible by heads " + std::to_string(heads));

  auto res = make_result<S>(x.shape(), {x.node(), weights.node(), bias.node()});
  kernels::grouped_mix_fwd(x.data(), weights.data(), bias.data(), res->data->data(), nwin, s,
                           channels, heads);
  MacCounter::instance().add(static_cast<u64>(nwin) * static_cast<u64>(s) * static_cast<u64>(s) *
                             static_cast<u64>(channels));

  if (res->requires_grad) {
    auto nx = x.node();
    auto nw = weights.node();
    auto nb = bias.node();
    res->backward_fn = [nx, nw, nb, nwin, s, channels, heads](Node<S>& self) {
      const S* g = self.grad.data();
      if (nx->requires_grad)
        kernels::grouped_mix_bwd_x(g, nw->data->data(), nx->grad_acc(), nwin, s, channels, heads);
      if (nw->requires_grad || nb->requires_grad) {
        std::vector<S> scratch_w, scratch_b;
        S* dw = nw->requires_grad ? nw->grad_acc() : nullptr;
        S* db = nb->requires_grad ? nb->grad_acc() : nullptr;
        if (!dw) {
          scratch_w.assign(static_cast<size_t>(heads * s * s), S(0));
          dw = scratch_w.data();
        }
        if (!db) {
          scratch_b.assign(static_cast<size_t>(heads * s), S(0));
          db = scratch_b.data();
        }
        kernels::grouped_mix_bwd_w(nx->data->data(), g, dw, db, nwin, s, channels, heads);
      }
    };
  }
  return Tensor<S>(res);
}

// ---- loss and reductions ---------------------------------------------------

template <class S>
Tensor<S> cross_entropy(const Tensor<S>& logits, const std::vector<i64>& targets, i64 ignore_id) {
  const i64 rows = logits.rows();
  const i64 vocab = logits.cols();
  if (static_cast<i64>(targets.size()) != rows)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(rows) + " rows");
  i64 kept = 0;
  for (i64 r = 0; r < rows; ++r) {
    if (targets[static_cast<size_t>(r)] == ignore_id) continue;
    const i64 t = targets[static_cast<size_t>(r)];
    if (t < 0 || t >= vocab)
      throw ShapeError("cross_entropy: target " + std::to_string(t) + " outside vocab of " +
                       std::to_string(vocab));
    ++kept;
  }
  if (kept == 0) throw NumericError("cross_entropy: every target is the ignore id");

  auto res = make_result<S>({1}, {logits.node()});
  const S* pl = logits.data();
  double total = 0.0;
  for (i64 r = 0; r < rows; ++r) {
    const i64 t = targets[static_cast<size_t>(r)];
    if (t == ignore_id) continue;
    const S* row = pl + r * vocab;
    S mx = row[0];
    for (i64 v = 1; v < vocab; ++v) mx = std::max(mx, row[v]);
    double z = 0.0;
    for (i64 v = 0; v < vocab; ++v) z += std::exp(static_cast<double>(row[v] - mx));
    total += static_cast<double>(mx) + std::log(z) - static_cast<double>(row[t]);
  }
  (*res->data)[0] = static_cast<S>(total / static_cast<double>(kept));

  if (res->requires_grad) {
    auto nl = logits.node();
    res->backward_fn = [nl, rows, vocab, kept, ignore_id, tgt = targets](Node<S>& self) {
      const S g0 = self.grad[0];
      const S* pl2 = nl->data->data();
      S* d = nl->grad_acc();
      const S f = g0 / static_cast<S>(kept);
      for (i64 r = 0; r < rows; ++r) {
        const i64 t = tgt[static_cast<size_t>(r)];
        if (t == ignore_id) continue;
        const S* row = pl2 + r * vocab;
        S mx = row[0];
        for (i64 v = 1; v < vocab; ++v) mx = std::max(mx, row[v]);
        double z = 0.0;
        for (i64 v = 0; v < vocab; ++v) z += std::exp(static_cast<double>(row[v] - mx));
        for (i64 v = 0; v < vocab; ++v) {
          const S p = static_cast<S>(std::exp(static_cast<double>(row[v] - mx)) / z);
          d[r * vocab + v] += f * (p - (v == t ? S(1) : S(0)));
        }
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> sum(const Tensor<S>& x) {
  auto res = make_result<S>({1}, {x.node()});
  const S* px = x.data();
  const i64 n = x.numel();
  double total = 0.0;
  for (i64 i = 0; i < n; ++i) total += px[i];
  (*res->data)[0] = static_cast<S>(total);

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, n](Node<S>& self) {
      const S g0 = self.grad[0];
      S* d = nx->grad_acc();
      for (i64 i = 0; i < n; ++i) d[i] += g0;
    };
  }
  return Tensor<S>(res);
}

// ---- layout ops ------------------------------------------------------------

template <class S>
Tensor<S> block(const Tensor<S>& x, i64 r0, i64 nr, i64 c0, i64 nc) {
  const i64 rows = x.rows(), cols = x.cols();
  if (r0 < 0 || nr <= 0 || r0 + nr > rows || c0 < 0 || nc <= 0 || c0 + nc > cols)
    throw ShapeError("block: region (" + std::to_string(r0) + "," + std::to_string(nr) + "," +
                     std::to_string(c0) + "," + std::to_string(nc) + ") outside " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  auto res = make_result<S>({nr, nc}, {x.node()});
  const S* px = x.data();
  S* po = res->data->data();
  for (i64 r = 0; r < nr; ++r)
    std::memcpy(po + r * nc, px + (r0 + r) * cols + c0, static_cast<size_t>(nc) * sizeof(S));

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, r0, nr, c0, nc, cols](Node<S>& self) {
      const S* g = self.grad.data();
      S* d = nx->grad_acc();
      for (i64 r = 0; r < nr; ++r)
        for (i64 c = 0; c < nc; ++c) d[(r0 + r) * cols + c0 + c] += g[r * nc + c];
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const i64 cols = parts[0].cols();
  i64 rows = 0;
  std::vector<std::shared_ptr<Node<S>>> parents;
  parents.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw ShapeError("concat_rows: trailing dim mismatch, " + std::to_string(p.cols()) + " vs " +
                       std::to_string(cols));
    rows += p.rows();
    parents.push_back(p.node());
  }
  auto res = make_result<S>({rows, cols}, parents);
  S* po = res->data->data();
  i64 off = 0;
  for (const auto& p : parts) {
    std::memcpy(po + off, p.data(), static_cast<size_t>(p.numel()) * sizeof(S));
    off += p.numel();
  }

  if (res->requires_grad) {
    res->backward_fn = [parents, cols](Node<S>& self) {
      const S* g = self.grad.data();
      i64 off2 = 0;
      for (const auto& p : parents) {
        const i64 n = p->numel();
        if (p->requires_grad) {
          S* d = p->grad_acc();
          for (i64 i = 0; i < n; ++i) d[i] += g[off2 + i];
        }
        off2 += n;
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const i64 rows = parts[0].rows();
  i64 cols = 0;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::vector<i64> widths;
  parents.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ShapeError("concat_cols: row count mismatch, " + std::to_string(p.rows()) + " vs " +
                       std::to_string(rows));
    cols += p.cols();
    widths.push_back(p.cols());
    parents.push_back(p.node());
  }
  auto res = make_result<S>({rows, cols}, parents);
  S* po = res->data->data();
  i64 coff = 0;
  for (size_t i = 0; i < parts.size(); ++i) {
    const S* src = parts[i].data();
    const i64 w = widths[i];
    for (i64 r = 0; r < rows; ++r)
      std::memcpy(po + r * cols + coff, src + r * w, static_cast<size_t>(w) * sizeof(S));
    coff += w;
  }

  if (res->requires_grad) {
    res->backward_fn = [parents, widths, rows, cols](Node<S>& self) {
      const S* g = self.grad.data();
      i64 coff2 = 0;
      for (size_t i = 0; i < parents.size(); ++i) {
        const i64 w = widths[i];
        if (parents[i]->requires_grad) {
          S* d = parents[i]->grad_acc();
          for (i64 r = 0; r < rows; ++r)
            for (i64 c = 0; c < w; ++c) d[r * w + c] += g[r * cols + coff2 + c];
        }
        coff2 += w;
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> permute_rows(const Tensor<S>& x, const std::vector<i64>& idx) {
  const i64 rows = x.rows(), cols = x.cols();
  for (i64 i : idx)
    if (i < 0 || i >= rows)
      throw ShapeError("permute_rows: index " + std::to_string(i) + " outside " +
                       std::to_string(rows) + " rows");
  const i64 out_rows = static_cast<i64>(idx.size());
  auto res = make_result<S>({out_rows, cols}, {x.node()});
  const S* px = x.data();
  S* po = res->data->data();
  for (i64 r = 0; r < out_rows; ++r)
    std::memcpy(po + r * cols, px + idx[static_cast<size_t>(r)] * cols,
                static_cast<size_t>(cols) * sizeof(S));

  if (res->requires_grad) {
    auto nx = x.node();
    res->backward_fn = [nx, cols, out_rows, ix = idx](Node<S>& self) {
      const S* g = self.grad.data();
      S* d = nx->grad_acc();
      for (i64 r = 0; r < out_rows; ++r) {
        S* drow = d + ix[static_cast<size_t>(r)] * cols;
        const S* grow = g + r * cols;
        for (i64 c = 0; c < cols; ++c) drow[c] += grow[c];
      }
    };
  }
  return Tensor<S>(res);
}

template <class S>
Tensor<S> embedding(const Tensor<S>& table, const std::vector<i64>& ids) {
  if (table.rank() != 2)
    throw ShapeError("embedding: table must be [vocab, dim], got " + shape_str(table.shape()));
  return permute_rows(table, ids);
}

template <class S>
Tensor<S> reshape(const Tensor<S>& x, std::vector<i64> new_shape) {
  if (shape_numel(new_shape) != x.numel())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(new_shape) +
                     " changes element count");
  auto node = std::make_shared<Node<S>>();
  node->shape = std::move(new_shape);
  node->data = x.node()->data;  // shared buffer
  if (g_grad_enabled && x.requires_grad()) {
    node->requires_grad = true;
    node->parents = {x.node()};
    auto nx = x.node();
    node->backward_fn = [nx](Node<S>& self) {
      S* d = nx->grad_acc();
      const i64 n = static_cast<i64>(self.grad.size());
      for (i64 i = 0; i < n; ++i) d[i] += self.grad[static_cast<size_t>(i)];
    };
  }
  return Tensor<S>(node);
}

// ---- backward sweep ---------------------------------------------------------

template <class S>
void backward(const Tensor<S>& loss) {
  if (!loss.valid()) throw NumericError("backward: empty tensor");
  auto root = loss.node();
  if (root->numel() != 1)
    throw NumericError("backward: loss must be scalar, has " + std::to_string(root->numel()) +
                       " elements");
  if (root->backward_ran)
    throw NumericError("backward: graph already consumed, rebuild the forward pass");

  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->parents.size()) {
      Node<S>* p = top.first->parents[top.second].get();
      ++top.second;
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(top.first);
      stack.pop_back();
    }
  }

  root->grad_acc()[0] = S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // reachable parameters untouched by any closure still expose a zero grad
  for (Node<S>* n : order)
    if (n->requires_grad && n->grad.empty()) n->grad.assign(n->data->size(), S(0));
  root->backward_ran = true;
}

i64 argmax_row(const float* row, i64 n) {
  i64 best = 0;
  for (i64 i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

i64 argmax_row(const double* row, i64 n) {
  i64 best = 0;
  for (i64 i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

#define SWINCAP_INSTANTIATE_TENSOR(S)                                                           \
  template class Tensor<S>;                                                                     \
  template Tensor<S> trunc_normal<S>(std::vector<i64>, double, SplitMix64&);                    \
  template Tensor<S> uniform<S>(std::vector<i64>, double, double, SplitMix64&);                 \
  template Tensor<S> matmul<S>(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> matmul_nt<S>(const Tensor<S>&, const Tensor<S>&);                          \
  template Tensor<S> add<S>(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> mul<S>(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> scale<S>(const Tensor<S>&, S);                                             \
  template Tensor<S> add_bias<S>(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> layernorm<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, S);     \
  template Tensor<S> gelu<S>(const Tensor<S>&);                                                 \
  template Tensor<S> softmax<S>(const Tensor<S>&, i64);                                         \
  template Tensor<S> grouped_spatial_mix<S>(const Tensor<S>&, const Tensor<S>&,                 \
                                            const Tensor<S>&);                                  \
  template Tensor<S> cross_entropy<S>(const Tensor<S>&, const std::vector<i64>&, i64);          \
  template Tensor<S> sum<S>(const Tensor<S>&);                                                  \
  template Tensor<S> block<S>(const Tensor<S>&, i64, i64, i64, i64);                            \
  template Tensor<S> concat_rows<S>(const std::vector<Tensor<S>>&);                             \
  template Tensor<S> concat_cols<S>(const std::vector<Tensor<S>>&);                             \
  template Tensor<S> permute_rows<S>(const Tensor<S>&, const std::vector<i64>&);                \
  template Tensor<S> embedding<S>(const Tensor<S>&, const std::vector<i64>&);                   \
  template Tensor<S> reshape<S>(const Tensor<S>&, std::vector<i64>);                            \
  template void backward<S>(const Tensor<S>&)

SWINCAP_INSTANTIATE_TENSOR(float);
SWINCAP_INSTANTIATE_TENSOR(double);

}  // namespace swincap
