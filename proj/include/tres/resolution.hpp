#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "tres/grid.hpp"

namespace tres {

struct ResolutionConfig {
  double eta = 1.0;   ///< effective height, intensity units
  double p0 = 0.1;
  double p1 = 0.9;
  double step = 0.25; ///< bandwidth increment, pixels
  /// Largest bandwidth tried; defaults to twice the largest grid extent.
  std::optional<double> sigma_cap;
};

struct ResolutionField {
  ImageGrid sigma_star;          ///< pixels
  std::size_t iterations_used = 0;
  std::size_t capped_pixels = 0; ///< unsatisfied at sigma_cap; hold sigma_cap
  double sigma_cap = 0.0;        ///< resolved cap actually used
};

/// Snapshot passed to an optional observer after each bandwidth.
struct ResolutionIteration {
  std::size_t index = 0;
  double sigma = 0.0;
  const ImageGrid* quantile_range = nullptr;
  std::size_t satisfied = 0;      ///< pixels satisfied at least once so far
  std::size_t newly_satisfied = 0;
};

/// eta (p1 - p0)
double threshold_value(const ResolutionConfig& cfg);

double default_sigma_cap(const Shape& shape);

/// Throws InvalidInput if the configuration violates its invariants.
void validate(const ResolutionConfig& cfg);

/// Smallest bandwidth on the grid 0, step, 2 step, ... at which the pixelwise
/// (p0, p1) quantile range of the smoothed images first drops to the
/// threshold. Each pixel keeps the first bandwidth that satisfied it.
ResolutionField resolution_measure(
    const ImageStack& registered, const ResolutionConfig& cfg,
    const std::function<void(const ResolutionIteration&)>& observer = {});

}  // namespace tres
