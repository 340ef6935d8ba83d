#pragma once

#include "asyncnet/sim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace asyncnet {

// Synthetic LMS network: agent k observes d = u w_o + v with u ~ N(0, R_u)
// and noise variance sigma_v2[k]; w_o = 1 / sqrt(M).
ExperimentSpec lms_spec(StrategyKind kind, int M, const std::vector<double>& sigma_v2, const StepSizeProcess& step,
                        std::optional<RandomCombinationPolicy> policy, long runs, long iterations,
                        std::uint64_t seed, const Matrix& R_u = Matrix());

struct DemoResult {
  std::string name;
  bool pass = false;
  std::vector<std::string> lines;
};

const std::vector<std::string>& demo_names();
// Throws std::invalid_argument on an unknown name.
DemoResult run_demo(const std::string& name, std::uint64_t seed = 2024, int threads = 0);

}  // namespace asyncnet
