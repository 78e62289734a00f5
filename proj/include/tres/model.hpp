#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tres/grid.hpp"

namespace tres {

/// Standard normal distribution function.
double std_normal_cdf(double x);

/// Largest difference between two unit step edges shifted by tau after
/// Gaussian smoothing with bandwidth sigma: |2 Phi(tau / (2 sigma)) - 1|.
double edge_max_diff(double tau, double sigma);

/// Linearized peak difference of two smoothed point masses at distance tau,
/// rescaled by sigma: |tau / sigma| / sqrt(2 pi e).
double point_mass_max_diff_approx(double tau, double sigma);

struct PointMassMaximum {
  double value = 0.0;     ///< max_x sigma |K_sigma(x) - K_sigma(x - tau)|
  double location = 0.0;  ///< one maximizer x
};

/// Direct numerical maximization of the rescaled point-mass difference: dense
/// scan at step sigma / 1000 over [-tau/2 - 6 sigma, tau/2 + 6 sigma], then
/// golden-section refinement around the best sample.
PointMassMaximum point_mass_max_diff_exact_search(double tau, double sigma);
double point_mass_max_diff_exact(double tau, double sigma);

/// 1D pixel grid with coordinate x_i = origin + i.
struct EdgeGrid {
  std::size_t size = 128;
  double origin = -64.0;

  double coordinate(std::size_t i) const { return origin + static_cast<double>(i); }
  /// Grid of `size` pixels with x = 0 on pixel size / 2.
  static EdgeGrid centered(std::size_t size);
};

struct EdgeSampleSpec {
  std::size_t n = 1000;
  double tau = 4.0;
  EdgeGrid grid;
  std::uint64_t seed = 0;
};

/// Counter-based generator: the k-th draw is a SplitMix64 hash of
/// (seed, k), so a sequence is fully determined by its seed and length.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double next_uniform();
  /// Standard normal via the Box-Muller transform (both outputs are used).
  double next_normal();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Edge shifts s_i ~ N(0, tau^2), in draw order.
std::vector<double> sample_edge_shifts(const EdgeSampleSpec& spec);

/// Discretized indicator edges 1{x <= s_i} for the shifts of `spec`.
ImageStack sample_edges(const EdgeSampleSpec& spec);
ImageGrid edge_image(const EdgeGrid& grid, double shift);

/// Value at x = 0 of a unit edge at `shift` smoothed with bandwidth tau:
/// Phi(shift / tau).
double smoothed_edge_value_at_zero(double shift, double tau);

}  // namespace tres
