#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "lagan/equilibrium.hpp"
#include "lagan/nn.hpp"

namespace lagan::cli {

enum ExitCode : int {
  kSuccess = 0,
  kVerificationFailure = 1,
  kUsageError = 2,
  kPartialCollapse = 3,
};

inline constexpr const char* kToolVersion = "0.1.0";

/// {check, family, parameter, support, seed, lhs, rhs, residual, abs_residual, tolerance, pass}
nlohmann::json to_json(const IdentityReport& r);

/// Runs one of all, theorem1, lemmas, props, divergence-zoo. Each random
/// (p, q) pair is drawn from seed index 0..seeds−1. Unknown names throw
/// std::invalid_argument.
std::vector<IdentityReport> run_suite(const std::string& suite, std::size_t seeds, double tolerance);

/// A small random network (2–4 inputs, one or two tanh/leaky hidden layers,
/// sigmoid head) with a random batch and probe, checked against central
/// differences.
nn::GradientCheck grad_check_toy(std::uint64_t seed);

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lagan::cli
