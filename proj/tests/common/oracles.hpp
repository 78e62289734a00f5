#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library's smoothing, quantile or normal-distribution code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

/// Phi(x) from the Maclaurin series of erf, summed in long double. Beyond
/// |x| = 7 the tail mass is below 1e-11 and the series loses precision, so the
/// limit value is returned.
inline double normal_cdf_series(double x) {
  if (x > 7.0) return 1.0;
  if (x < -7.0) return 0.0;
  const long double z = static_cast<long double>(x) / std::numbers::sqrt2_v<long double>;
  long double term = z;  // (-1)^n z^(2n+1) / n!
  long double sum = z;
  for (int n = 1; n < 400; ++n) {
    term *= -z * z / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  const long double erf = 2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum;
  return static_cast<double>(0.5L * (1.0L + erf));
}

/// Truncated, renormalized Gaussian weights at offsets -r..r, r = ceil(4 sigma).
inline std::vector<double> dense_kernel(double sigma) {
  if (sigma == 0.0) return {1.0};
  const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> w(2 * r + 1);
  double z = 0.0;
  for (int k = -r; k <= r; ++k) z += std::exp(-(k * k) / (2.0 * sigma * sigma));
  for (int k = -r; k <= r; ++k) w[k + r] = std::exp(-(k * k) / (2.0 * sigma * sigma)) / z;
  return w;
}

/// Direct 1D convolution with zero extension.
inline std::vector<double> dense_convolve(const std::vector<double>& f, const std::vector<double>& w) {
  const int r = static_cast<int>(w.size() / 2);
  const int n = static_cast<int>(f.size());
  std::vector<double> out(f.size(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = i - j;
      if (k >= -r && k <= r) out[i] += w[k + r] * f[j];
    }
  return out;
}

/// Linear-interpolation quantile on a sorted copy.
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Naive per-pixel search over sigma = 0, step, ... for 1D stacks.
inline std::vector<double> sigma_star_1d(const std::vector<std::vector<double>>& images, double eta,
                                         double p0, double p1, double step, double cap) {
  const std::size_t n = images.front().size();
  std::vector<double> out(n, -1.0);
  for (int k = 0; static_cast<double>(k) * step <= cap; ++k) {
    const double sigma = k * step;
    const auto w = dense_kernel(sigma);
    std::vector<std::vector<double>> smoothed;
    for (const auto& im : images) smoothed.push_back(dense_convolve(im, w));
    bool all = true;
    for (std::size_t x = 0; x < n; ++x) {
      if (out[x] >= 0.0) continue;
      std::vector<double> col;
      for (const auto& s : smoothed) col.push_back(s[x]);
      if (quantile(col, p1) - quantile(col, p0) <= eta * (p1 - p0)) out[x] = sigma;
      else all = false;
    }
    if (all) break;
  }
  return out;
}

}  // namespace oracle
