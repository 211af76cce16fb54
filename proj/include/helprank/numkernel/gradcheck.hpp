#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "helprank/numkernel/matrix.hpp"
#include "helprank/numkernel/tape.hpp"

namespace helprank::numkernel {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t entries = 0;
  std::string worst;  // "input k (i,j)" of the worst entry
  bool passed = false;
};

/// How a (possibly non-scalar) op output is reduced to the scalar that is
/// differentiated: plain sum, or a fixed random weighting (seeded) so that
/// outputs with constant sums, e.g. softmax rows, still carry signal.
enum class Reduction { kSum, kRandomWeights };

struct GradCheckOptions {
  double step = 1e-5;
  Reduction reduction = Reduction::kRandomWeights;
  std::uint64_t seed = 0x5eed;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
};

using InputFunction = std::function<Var(Tape&, std::span<const Var>)>;
using ParamFunction = std::function<Var(Tape&)>;

/// Compares tape gradients w.r.t. every entry of `inputs` with central
/// differences. Passes iff the max relative error is below `tol`.
GradCheckReport finite_difference_check(const InputFunction& op, std::vector<Matrix> inputs,
                                        double tol, const GradCheckOptions& options = {});

/// Same, against the entries of the given parameters (perturbed in place
/// and restored). `op` must rebuild its graph from the parameters each call.
GradCheckReport finite_difference_check(const ParamFunction& op,
                                        const std::vector<Parameter*>& params, double tol,
                                        const GradCheckOptions& options = {});

}  // namespace helprank::numkernel
