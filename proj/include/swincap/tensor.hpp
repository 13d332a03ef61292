#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include "swincap/common.hpp"
#include "swincap/rng.hpp"

namespace swincap {

/// Global multiply-accumulate counter. matmul and grouped_spatial_mix report
/// m*k*n-style counts here when enabled; the complexity analyzer checks the
/// measured totals against its closed forms with integer equality.
/// Elementwise costs (layernorm / gelu / softmax) are excluded from the main
/// count and tracked separately behind their own flag.
class MacCounter {
 public:
  static MacCounter& instance();

  void enable(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }
  void reset() {
    total_.store(0);
    elementwise_.store(0);
  }
  u64 total() const { return total_.load(); }
  void add(u64 macs) {
    if (enabled_) total_.fetch_add(macs, std::memory_order_relaxed);
  }

  void enable_elementwise(bool on) { elementwise_enabled_ = on; }
  u64 elementwise_total() const { return elementwise_.load(); }
  void add_elementwise(u64 n) {
    if (enabled_ && elementwise_enabled_) elementwise_.fetch_add(n, std::memory_order_relaxed);
  }

 private:
  std::atomic<u64> total_{0};
  std::atomic<u64> elementwise_{0};
  bool enabled_ = false;
  bool elementwise_enabled_ = false;
};

/// Thread-local autodiff switch. While disabled, ops run forward math only
/// and record no graph; used for decoding and instrumented cost runs.
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <class S>
struct Node {
  std::vector<i64> shape;
  std::shared_ptr<std::vector<S>> data;
  bool requires_grad = false;
  std::vector<S> grad;  // sized lazily on first accumulation
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void(Node<S>&)> backward_fn;
  bool backward_ran = false;

  i64 numel() const { return data ? static_cast<i64>(data->size()) : 0; }
  S* grad_acc() {
    if (grad.size() != data->size()) grad.assign(data->size(), S(0));
    return grad.data();
  }
};

/// Dense n-dimensional array, a value-semantic handle onto a shared node.
/// Instantiated for float (training) and double (gradient checking).
template <class S>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<S>> n) : n_(std::move(n)) {}

  static Tensor zeros(std::vector<i64> shape);
  static Tensor full(std::vector<i64> shape, S value);
  static Tensor from_data(std::vector<i64> shape, std::vector<S> values);
  static Tensor scalar(S value) { return from_data({1}, {value}); }

  bool valid() const { return n_ != nullptr; }
  const std::vector<i64>& shape() const { return n_->shape; }
  i64 rank() const { return static_cast<i64>(n_->shape.size()); }
  i64 dim(i64 i) const { return n_->shape[static_cast<size_t>(i)]; }
  i64 numel() const { return n_->numel(); }
  /// Trailing dimension; tensors are logically [rows, cols] for 2-D ops.
  i64 cols() const { return n_->shape.empty() ? 1 : n_->shape.back(); }
  i64 rows() const { return cols() == 0 ? 0 : numel() / cols(); }

  const S* data() const { return n_->data->data(); }
  /// Direct write access, intended for leaves (parameter updates, test rigs).
  S* mutable_data() { return n_->data->data(); }
  S item() const {
    if (numel() != 1) throw ShapeError("item() requires a scalar tensor");
    return (*n_->data)[0];
  }

  bool requires_grad() const { return n_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    n_->requires_grad = on;
    return *this;
  }
  bool has_grad() const { return !n_->grad.empty(); }
  const std::vector<S>& grad() const {
    if (n_->grad.empty()) throw NumericError("tensor has no gradient (backward not run?)");
    return n_->grad;
  }
  void zero_grad() { n_->grad.assign(n_->data->size(), S(0)); }

  std::shared_ptr<Node<S>> node() const { return n_; }

 private:
  std::shared_ptr<Node<S>> n_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

i64 shape_numel(const std::vector<i64>& shape);

/// Random init helpers. Fill order is row-major, so values are a pure
/// function of (shape, rng state).
template <class S>
Tensor<S> trunc_normal(std::vector<i64> shape, double std_dev, SplitMix64& rng);
template <class S>
Tensor<S> uniform(std::vector<i64> shape, double lo, double hi, SplitMix64& rng);

// ---- Differentiable ops -------------------------------------------------
// All ops are eager: they compute their value on construction and, when the
// tape is enabled and an input requires grad, register a backward closure.

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);
/// a * b^T with b stored row-major as [n, k].
template <class S>
Tensor<S> matmul_nt(const Tensor<S>& a, const Tensor<S>& b);

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <class S>
Tensor<S> scale(const Tensor<S>& x, S factor);
/// x[..., D] + bias[D], broadcast over rows.
template <class S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias);

/// Per-row normalization over the trailing dim, then affine with gamma/beta.
template <class S>
Tensor<S> layernorm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                    S eps = S(1e-5));

/// tanh-approximation GELU; cubic coefficient 0.044715.
template <class S>
Tensor<S> gelu(const Tensor<S>& x);

/// Softmax along `axis` (negative counts from the back); max-subtracted.
template <class S>
Tensor<S> softmax(const Tensor<S>& x, i64 axis = -1);

/// out[w,j,c] = sum_k weights[head(c),j,k] * x[w,k,c] + bias[head(c),j].
/// x: [nwin, s, C]; weights: [heads, s, s]; bias: [heads, s]. heads | C.
template <class S>
Tensor<S> grouped_spatial_mix(const Tensor<S>& x, const Tensor<S>& weights, const Tensor<S>& bias);

/// Mean negative log-softmax over positions whose target is not ignore_id.
template <class S>
Tensor<S> cross_entropy(const Tensor<S>& logits, const std::vector<i64>& targets, i64 ignore_id);

template <class S>
Tensor<S> sum(const Tensor<S>& x);

/// Submatrix copy of the logical 2-D view: rows [r0, r0+nr), cols [c0, c0+nc).
template <class S>
Tensor<S> block(const Tensor<S>& x, i64 r0, i64 nr, i64 c0, i64 nc);

template <class S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts);
template <class S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts);

/// out.row(i) = x.row(idx[i]); idx need not be a permutation (gather).
template <class S>
Tensor<S> permute_rows(const Tensor<S>& x, const std::vector<i64>& idx);

/// Row lookup: out[i, :] = table[ids[i], :].
template <class S>
Tensor<S> embedding(const Tensor<S>& table, const std::vector<i64>& ids);

/// Same buffer, new shape metadata (no copy).
template <class S>
Tensor<S> reshape(const Tensor<S>& x, std::vector<i64> new_shape);

/// Reverse-mode sweep from a scalar loss. Populates .grad on every
/// requires_grad tensor reachable from it. A second sweep from the same loss
/// node without rebuilding the graph is an error.
template <class S>
void backward(const Tensor<S>& loss);

i64 argmax_row(const float* row, i64 n);
i64 argmax_row(const double* row, i64 n);

}  // namespace swincap
