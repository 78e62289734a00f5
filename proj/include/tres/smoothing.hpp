#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tres/grid.hpp"

namespace tres {

/// Truncation radius used for a bandwidth: ceil(4 sigma), at least 1 for sigma > 0.
std::size_t kernel_radius(double sigma);

/// Samples of the Gaussian density at integer offsets -r..r, renormalized to
/// sum to one. sigma = 0 gives the identity kernel {1}.
std::vector<double> gaussian_kernel_1d(double sigma);

/// Sampled derivative-of-Gaussian, -k K(k), scaled so that filtering the ramp
/// f(i) = i returns 1 away from the boundary. Requires sigma > 0.
std::vector<double> gaussian_derivative_kernel_1d(double sigma);

/// Correlation of every line along `axis` with an odd-length kernel centered
/// at its middle entry; samples outside the grid count as 0.
ImageGrid convolve_axis(const ImageGrid& grid, std::span<const double> kernel, std::size_t axis);

/// Separable Gaussian smoothing with zero extension.
ImageGrid gaussian_smooth(const ImageGrid& grid, double sigma);

/// Derivative along `axis`, Gaussian smoothing along the remaining axes.
ImageGrid gaussian_derivative(const ImageGrid& grid, double sigma, std::size_t axis);

}  // namespace tres
