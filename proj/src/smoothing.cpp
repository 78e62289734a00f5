#include "tres/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tres/error.hpp"
#include "tres/parallel.hpp"

namespace tres {

std::size_t kernel_radius(double sigma) {
  if (!(sigma > 0.0)) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(4.0 * sigma)));
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidInput("Gaussian bandwidth must be finite and non-negative");
  if (sigma == 0.0) return {1.0};
  const auto r = static_cast<std::ptrdiff_t>(kernel_radius(sigma));
  std::vector<double> w(2 * r + 1);
  double total = 0.0;
  for (std::ptrdiff_t k = -r; k <= r; ++k) {
    const double x = static_cast<double>(k) / sigma;
    w[k + r] = std::exp(-0.5 * x * x);
  }
  // Sum symmetric pairs from the tails inward so the kernel stays exactly symmetric.
  for (std::ptrdiff_t k = r; k >= 1; --k) total += w[r + k] + w[r - k];
  total += w[r];
  for (auto& v : w) v /= total;
  return w;
}

std::vector<double> gaussian_derivative_kernel_1d(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidInput("derivative filter bandwidth must be positive");
  const auto r = static_cast<std::ptrdiff_t>(kernel_radius(sigma));
  std::vector<double> w(2 * r + 1);
  double second_moment = 0.0;
  for (std::ptrdiff_t k = -r; k <= r; ++k) {
    const double x = static_cast<double>(k) / sigma;
    const double g = std::exp(-0.5 * x * x);
    w[k + r] = -static_cast<double>(k) * g;
    second_moment += static_cast<double>(k * k) * g;
  }
  for (auto& v : w) v /= second_moment;
  return w;
}

ImageGrid convolve_axis(const ImageGrid& grid, std::span<const double> kernel, std::size_t axis) {
  if (axis >= grid.dim()) throw InvalidInput("axis out of range");
  if (kernel.size() % 2 != 1) throw InvalidInput("kernel length must be odd");
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  ImageGrid out(grid.shape());
  const auto strides = grid.strides();
  const std::size_t n = grid.shape()[axis];
  const std::size_t stride = strides[axis];
  const std::size_t lines = grid.size() / n;
  const auto in = grid.values();
  auto dst = out.values();

  parallel_for(lines, [&](std::size_t line) {
    // Offset of the first element of this line: split `line` into the index
    // above the axis and the index below it.
    const std::size_t outer = line / stride;
    const std::size_t inner = line % stride;
    const std::size_t start = outer * n * stride + inner;
    const auto len = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      // out[i] = sum_k kernel[k + r] * in[i + k] over in-range samples.
      const std::ptrdiff_t k_lo = std::max(-r, -i);
      const std::ptrdiff_t k_hi = std::min(r, len - 1 - i);
      double acc = 0.0;
      for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k)
        acc += kernel[k + r] * in[start + static_cast<std::size_t>(i + k) * stride];
      dst[start + static_cast<std::size_t>(i) * stride] = acc;
    }
  });
  return out;
}

ImageGrid gaussian_smooth(const ImageGrid& grid, double sigma) {
  const auto kernel = gaussian_kernel_1d(sigma);
  if (sigma == 0.0) return grid;
  ImageGrid out = grid;
  for (std::size_t axis = 0; axis < grid.dim(); ++axis) out = convolve_axis(out, kernel, axis);
  return out;
}

ImageGrid gaussian_derivative(const ImageGrid& grid, double sigma, std::size_t axis) {
  if (!(sigma > 0.0)) throw InvalidInput("derivative filter bandwidth must be positive");
  if (axis >= grid.dim())
    throw InvalidInput("derivative axis " + std::to_string(axis) + " out of range");
  const auto smooth = gaussian_kernel_1d(sigma);
  // Correlation with the mirrored derivative kernel equals convolution with it.
  auto deriv = gaussian_derivative_kernel_1d(sigma);
  std::reverse(deriv.begin(), deriv.end());
  ImageGrid out = grid;
  for (std::size_t a = 0; a < grid.dim(); ++a)
    out = convolve_axis(out, a == axis ? std::span<const double>(deriv) : smooth, a);
  return out;
}

}  // namespace tres
