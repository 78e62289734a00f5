#include "tres/model.hpp"

#include <cmath>
#include <numbers>

#include "tres/error.hpp"

namespace tres {
namespace {

void require_positive_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be positive");
}

double gaussian_density(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double edge_max_diff(double tau, double sigma) {
  require_positive_sigma(sigma);
  return std::abs(2.0 * std_normal_cdf(0.5 * tau / sigma) - 1.0);
}

double point_mass_max_diff_approx(double tau, double sigma) {
  require_positive_sigma(sigma);
  return std::abs(tau / sigma) / std::sqrt(2.0 * std::numbers::pi * std::numbers::e);
}

PointMassMaximum point_mass_max_diff_exact_search(double tau, double sigma) {
  require_positive_sigma(sigma);
  // sigma K_sigma(x) = K_1(x / sigma)
  auto f = [&](double x) {
    return std::abs(gaussian_density(x / sigma) - gaussian_density((x - tau) / sigma));
  };
  // Both maximizers tau / 2 +- sigma lie well inside this interval.
  const double lo = -0.5 * std::abs(tau) - 6.0 * sigma;
  const double hi = 0.5 * std::abs(tau) + 6.0 * sigma;
  const double h = sigma / 1000.0;
  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  double best_x = lo;
  double best = f(best_x);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double x = lo + static_cast<double>(k) * h;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  // Golden-section search on the bracketing cell pair.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best_x - h;
  double b = best_x + h;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 80 && (b - a) > 1e-14 * (1.0 + std::abs(best_x)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x_ref = 0.5 * (a + b);
  const double v_ref = f(x_ref);
  if (v_ref >= best) return {v_ref, x_ref};
  return {best, best_x};
}

double point_mass_max_diff_exact(double tau, double sigma) {
  return point_mass_max_diff_exact_search(tau, sigma).value;
}

EdgeGrid EdgeGrid::centered(std::size_t size) {
  return {size, -static_cast<double>(size / 2)};
}

std::uint64_t CounterRng::next_u64() { return splitmix64(splitmix64(seed_) ^ counter_++); }

double CounterRng::next_uniform() {
  // 53 random bits mapped to the midpoints of 2^53 equal cells in (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<double> sample_edge_shifts(const EdgeSampleSpec& spec) {
  if (spec.n == 0) throw InvalidInput("edge sample needs n >= 1");
  if (!(spec.tau >= 0.0) || !std::isfinite(spec.tau)) throw InvalidInput("tau must be >= 0");
  CounterRng rng(spec.seed);
  std::vector<double> shifts(spec.n);
  for (auto& s : shifts) s = spec.tau * rng.next_normal();
  return shifts;
}

ImageGrid edge_image(const EdgeGrid& grid, double shift) {
  if (grid.size == 0) throw InvalidInput("edge grid is empty");
  std::vector<double> v(grid.size);
  for (std::size_t i = 0; i < grid.size; ++i) v[i] = grid.coordinate(i) <= shift ? 1.0 : 0.0;
  return ImageGrid({grid.size}, std::move(v));
}

ImageStack sample_edges(const EdgeSampleSpec& spec) {
  std::vector<ImageGrid> images;
  images.reserve(spec.n);
  for (double s : sample_edge_shifts(spec)) images.push_back(edge_image(spec.grid, s));
  return ImageStack(std::move(images));
}

double smoothed_edge_value_at_zero(double shift, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  return std_normal_cdf(shift / tau);
}

}  // namespace tres
