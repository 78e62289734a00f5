#include "tres/resolution.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tres/error.hpp"
#include "tres/parallel.hpp"
#include "tres/smoothing.hpp"

namespace tres {

double threshold_value(const ResolutionConfig& cfg) { return cfg.eta * (cfg.p1 - cfg.p0); }

double default_sigma_cap(const Shape& shape) {
  return 2.0 * static_cast<double>(*std::max_element(shape.begin(), shape.end()));
}

void validate(const ResolutionConfig& cfg) {
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw InvalidInput("eta must be positive");
  if (!(cfg.p0 > 0.0 && cfg.p0 < cfg.p1 && cfg.p1 < 1.0))
    throw InvalidInput("quantile probabilities must satisfy 0 < p0 < p1 < 1");
  if (!(cfg.step > 0.0) || !std::isfinite(cfg.step)) throw InvalidInput("step must be positive");
  if (cfg.sigma_cap && !(*cfg.sigma_cap >= cfg.step))
    throw InvalidInput("sigma_cap must be at least one step");
}

ResolutionField resolution_measure(const ImageStack& registered, const ResolutionConfig& cfg,
                                   const std::function<void(const ResolutionIteration&)>& observer) {
  if (registered.size() < 2) throw InvalidInput("resolution measure needs at least 2 images");
  validate(cfg);
  for (const auto& im : registered)
    for (double v : im.values())
      if (!std::isfinite(v)) throw InvalidInput("registered images contain non-finite values");
  const double cap = cfg.sigma_cap.value_or(default_sigma_cap(registered.shape()));
  if (!std::isfinite(cap)) throw InvalidInput("sigma_cap must be finite");
  const double threshold = threshold_value(cfg);
  const std::size_t n = registered.size();

  ResolutionField field;
  field.sigma_cap = cap;
  field.sigma_star = ImageGrid(registered.shape());
  const std::size_t pixels = field.sigma_star.size();
  std::vector<bool> satisfied(pixels, false);
  std::size_t satisfied_count = 0;

  for (std::size_t k = 0;; ++k) {
    // Bandwidths are k * step rather than an accumulated sum so every recorded
    // value is an exact multiple of the step.
    const double sigma = static_cast<double>(k) * cfg.step;
    if (sigma > cap) break;
    std::vector<ImageGrid> smoothed(n);
    parallel_for(n, [&](std::size_t i) { smoothed[i] = gaussian_smooth(registered[i], sigma); });
    const ImageGrid range = pixelwise_quantile_range(ImageStack(std::move(smoothed)), cfg.p0, cfg.p1);
    std::size_t fresh = 0;
    for (std::size_t p = 0; p < pixels; ++p) {
      if (!satisfied[p] && range[p] <= threshold) {
        satisfied[p] = true;
        field.sigma_star[p] = sigma;
        ++fresh;
      }
    }
    satisfied_count += fresh;
    field.iterations_used = k + 1;
    if (observer) observer({k, sigma, &range, satisfied_count, fresh});
    if (satisfied_count == pixels) break;
  }

  for (std::size_t p = 0; p < pixels; ++p) {
    if (!satisfied[p]) {
      field.sigma_star[p] = cap;
      ++field.capped_pixels;
    }
  }
  return field;
}

}  // namespace tres
