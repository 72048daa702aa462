#pragma once

// Continuous-time maximum likelihood estimator of A in
//   dX = -A V'(X) dt + sqrt(2 Sigma) dW
// discretised on sampled paths. The stochastic integral uses the LEFT
// endpoint (Ito); a midpoint rule converges to a different limit.

#include "sdeinfer/simulate.hpp"

#include <functional>
#include <span>
#include <vector>

namespace sdeinfer {

struct MleResult {
  double estimate = 0.0;  // Lambda_T
  double T = 0.0;         // horizon covered by the strided path
  std::size_t stride = 1;
};

/// Every stride-th state; step becomes stride * h.
Trajectory subsample(const Trajectory& path, std::size_t stride);

/// Lambda_T = -sum V'(X_k)(X_{k+1} - X_k) / sum V'(X_k)^2 H on the path
/// subsampled with `stride` (H = stride h). Uses the first coordinate.
MleResult mle_langevin(const Trajectory& path, const std::function<double(double)>& v_prime,
                       std::size_t stride = 1);

std::vector<MleResult> mle_stride_sweep(const Trajectory& path,
                                        const std::function<double(double)>& v_prime,
                                        std::span<const std::size_t> strides);

}  // namespace sdeinfer
