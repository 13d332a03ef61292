#pragma once

#include <vector>

#include "swincap/tensor.hpp"

namespace swincap {

/// Linear warmup to base_lr at step = warmup, then inverse-sqrt decay:
/// base_lr * min(step/warmup, sqrt(warmup/step)). Steps start at 1.
double lr_schedule(i64 step, double base_lr, i64 warmup);

/// Adam with bias correction over a fixed parameter list. Moments live in
/// float32 and the update reads the stored values, so a checkpointed state
/// resumes bit-exactly.
struct Adam {
  double base_lr = 3e-4;
  i64 warmup = 20000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  i64 steps = 0;

  std::vector<TensorF> params;
  std::vector<std::vector<float>> m, v;

  Adam(std::vector<TensorF> params, double base_lr, i64 warmup);

  /// Applies one update from the accumulated gradients (absent = zero) at
  /// lr_schedule(steps + 1), then increments steps.
  void step();
  void zero_grad();
};

}  // namespace swincap
