#include "swincap/optim.hpp"

#include <cmath>

#include "swincap/common.hpp"

namespace swincap {

double lr_schedule(i64 step, double base_lr, i64 warmup) {
  if (step < 1) throw NumericError("lr_schedule: step starts at 1");
  if (warmup < 1) throw ConfigError("lr_schedule: warmup must be positive");
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup);
  return base_lr * std::min(s / w, std::sqrt(w / s));
}

Adam::Adam(std::vector<TensorF> ps, double lr, i64 wu) : base_lr(lr), warmup(wu) {
  params = std::move(ps);
  m.reserve(params.size());
  v.reserve(params.size());
  for (TensorF& p : params) {
    if (!p.valid()) throw ShapeError("optimizer got an empty tensor");
    p.set_requires_grad(true);
    m.emplace_back(static_cast<size_t>(p.numel()), 0.0f);
    v.emplace_back(static_cast<size_t>(p.numel()), 0.0f);
  }
}

void Adam::step() {
  ++steps;
  const double lr = lr_schedule(steps, base_lr, warmup);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    TensorF& p = params[pi];
    const i64 n = p.numel();
    if (p.has_grad() && static_cast<i64>(p.grad().size()) != n)
      throw ShapeError("gradient shape does not match parameter");
    const float* g = p.has_grad() ? p.grad().data() : nullptr;
    float* w = p.mutable_data();
    float* mm = m[pi].data();
    float* vv = v[pi].data();
    for (i64 i = 0; i < n; ++i) {
      const double gi = g ? static_cast<double>(g[i]) : 0.0;
      mm[i] = static_cast<float>(beta1 * mm[i] + (1.0 - beta1) * gi);
      vv[i] = static_cast<float>(beta2 * vv[i] + (1.0 - beta2) * gi * gi);
      const double mhat = static_cast<double>(mm[i]) / bc1;
      const double vhat = static_cast<double>(vv[i]) / bc2;
      w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

void Adam::zero_grad() {
  for (TensorF& p : params) p.zero_grad();
}

}  // namespace swincap
