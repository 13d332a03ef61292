#pragma once

#include <string>
#include <vector>

#include "swincap/config.hpp"

namespace swincap {

/// Closed-form MAC counts for one mixer application over an h x w grid.
/// Projections cost 4hwC^2; attention scores and context add 2(hw)^2C for the
/// global form and 2M^2hwC when windowed; the spatial MLP mixes tokens inside
/// each window for hw*M^2*C, independent of the head count.
u64 cost_msa(i64 h, i64 w, i64 c);
u64 cost_wmsa(i64 h, i64 w, i64 c, i64 m);
u64 cost_wmlp(i64 h, i64 w, i64 c, i64 m);

struct ModuleCost {
  std::string name;
  u64 params = 0;
  u64 analytic_macs = 0;
  u64 measured_macs = 0;
};

struct CostReport {
  std::string config_echo;  // canonical config text
  std::vector<ModuleCost> modules;
  u64 encoder_params = 0, encoder_analytic = 0, encoder_measured = 0;
  u64 total_params = 0, total_analytic = 0, total_measured = 0;
};

/// Walks the configured model: analytic cost per module, then one
/// instrumented forward at the configured resolution. Throws NumericError
/// naming the first module where the two disagree. The decoder is sized for
/// `vocab` words and measured at a full-length sequence.
CostReport model_report(const RunConfig& cfg, i64 vocab = 20);

std::string report_markdown(const CostReport& r);
std::string report_csv(const CostReport& r);

}  // namespace swincap
