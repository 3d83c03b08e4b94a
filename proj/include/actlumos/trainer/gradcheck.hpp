#pragma once

#include <functional>
#include <string>
#include <vector>

#include "actlumos/core/types.hpp"

namespace actlumos::trainer {

/// Central-difference comparison against an analytic gradient, double
/// precision, step 1e-4. Relative error per component is
/// |analytic - fd| / max(|analytic|, |fd|, 1e-6).
///
/// Rectifier losses are piecewise smooth: when a perturbation straddles a
/// ReLU kink the central difference measures a blend of one-sided slopes and
/// is not a derivative estimate at all. Components that fail tolerance are
/// therefore re-probed at step h/2; if the two estimates disagree the point
/// is non-smooth and the component is excluded (counted in `skipped`, capped
/// at 2% of the parameters).
struct FdCompareResult {
  double max_rel_err = 0.0;
  Eigen::Index checked = 0;
  Eigen::Index skipped = 0;
};

FdCompareResult fd_compare(VecD& x, const std::function<double()>& eval, const VecD& analytic);

struct GradCheckReport {
  std::string loss_name;
  int instances = 0;
  double max_rel_err = 0.0;
  Eigen::Index skipped = 0;
  bool pass = false;  // max_rel_err < 1e-4 and the skip cap never tripped
};

std::vector<std::string> grad_check_names();

/// One seeded micro-instance of the named loss.
GradCheckReport grad_check(const std::string& loss_name, uint64_t instance_seed);

/// Aggregates seeds 1..instances.
GradCheckReport grad_check_suite(const std::string& loss_name, int instances = 20);

}  // namespace actlumos::trainer
