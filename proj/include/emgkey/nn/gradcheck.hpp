#pragma once

#include "emgkey/nn/netspec.hpp"
#include "emgkey/nn/network.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace emgkey::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  /// "<tensor>[<flat index>]" of the worst coordinate.
  std::string worst;
  std::size_t coordinates = 0;
  /// Coordinates left out because the loss has a kink within +-eps.
  std::size_t skipped = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates checked per tensor; 0 checks all of them.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  /// Leave out coordinates whose one-sided differences disagree by more than
  /// kink_tol relative to the comparison scale: a ReLU switching inside the
  /// stencil makes the central difference meaningless there.
  bool skip_kinks = false;
  double kink_tol = 1e-4;
};

/// Compares reverse-mode gradients of a scalar loss against central
/// differences. The loss function is re-evaluated for every perturbation and
/// must be deterministic. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, 1e-3 * max_i |a_i| over the tensor, 1e-10).
GradCheckReport check_gradients(const std::function<Var<double>()>& loss,
                                const std::vector<std::pair<std::string, Var<double>>>& wrt,
                                const GradCheckOptions& opts = {});

/// End-to-end check of a network from input to head loss in training mode
/// (batch statistics, dropout with a fixed mask) on a random batch. Norm
/// gains, shifts and biases are moved off their constant initial values
/// first, so the check runs at a generic point rather than one where whole
/// parameter groups are exactly redundant.
GradCheckReport check_network_gradients(const NetSpec& spec, std::size_t batch,
                                        const GradCheckOptions& opts = {});

}  // namespace emgkey::nn
