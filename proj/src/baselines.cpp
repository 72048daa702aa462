#include "sdeinfer/baselines.hpp"

#include "sdeinfer/errors.hpp"

#include <cmath>
#include <string>

namespace sdeinfer {

Trajectory subsample(const Trajectory& path, std::size_t stride) {
  if (stride == 0) throw ArgumentError("subsample: stride must be >= 1");
  if (path.length() == 0) return path;
  const std::size_t count = (path.length() - 1) / stride + 1;
  Trajectory out{path.t0, path.h * static_cast<double>(stride),
                 Matrix(path.states.rows(), static_cast<Eigen::Index>(count))};
  for (std::size_t k = 0; k < count; ++k) {
    out.states.col(static_cast<Eigen::Index>(k)) = path.states.col(static_cast<Eigen::Index>(k * stride));
  }
  return out;
}

MleResult mle_langevin(const Trajectory& path, const std::function<double(double)>& v_prime,
                       std::size_t stride) {
  if (stride == 0) throw ArgumentError("mle_langevin: stride must be >= 1");
  if (path.length() < 2 * stride) {
    throw ArgumentError("mle_langevin: path length " + std::to_string(path.length()) +
                        " shorter than 2 * stride");
  }
  const double H = path.h * static_cast<double>(stride);
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t k = 0;
  for (; k + stride < path.length(); k += stride) {
    const double x = path.states(0, static_cast<Eigen::Index>(k));
    const double next = path.states(0, static_cast<Eigen::Index>(k + stride));
    const double g = v_prime(x);  // left endpoint
    numerator += g * (next - x);
    denominator += g * g * H;
  }
  if (!(denominator > 0.0) || !std::isfinite(denominator)) {
    throw DegeneratePathError("mle_langevin: V'(X) vanishes along the path");
  }
  return {-numerator / denominator, H * static_cast<double>(k / stride), stride};
}

std::vector<MleResult> mle_stride_sweep(const Trajectory& path,
                                        const std::function<double(double)>& v_prime,
                                        std::span<const std::size_t> strides) {
  std::vector<MleResult> out;
  out.reserve(strides.size());
  for (std::size_t s : strides) out.push_back(mle_langevin(path, v_prime, s));
  return out;
}

}  // namespace sdeinfer
