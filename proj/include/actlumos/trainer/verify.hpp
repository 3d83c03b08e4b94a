#pragma once

#include <string>
#include <vector>

namespace actlumos::trainer {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The release gate: gradient suite, frozen loss oracles, batch/fusion/
/// retinex/sampler invariants. One entry per named check.
std::vector<VerifyCheck> run_verification(int grad_instances = 20);

}  // namespace actlumos::trainer
