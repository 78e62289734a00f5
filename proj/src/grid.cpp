#include "tres/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "tres/error.hpp"
#include "tres/parallel.hpp"

namespace tres {
namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 3)
    throw InvalidInput("grid dimension must be 1, 2 or 3, got " + std::to_string(shape.size()));
  for (auto extent : shape)
    if (extent == 0) throw InvalidInput("grid extents must be positive");
}

void check_probabilities(double p0, double p1) {
  if (!(p0 > 0.0 && p0 < p1 && p1 < 1.0))
    throw InvalidInput("quantile probabilities must satisfy 0 < p0 < p1 < 1");
}

double interpolated_order_statistic(std::span<const double> sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Applies `reduce` to the per-pixel column of stack values.
ImageGrid reduce_pixelwise(const ImageStack& stack,
                           const std::function<double(std::span<double>)>& reduce) {
  if (stack.empty()) throw InvalidInput("image stack is empty");
  ImageGrid out(stack.shape());
  const std::size_t n = stack.size();
  const std::size_t pixels = out.size();
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (pixels + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> column(n);
    const std::size_t end = std::min(pixels, (b + 1) * kBlock);
    for (std::size_t p = b * kBlock; p < end; ++p) {
      for (std::size_t i = 0; i < n; ++i) column[i] = stack[i][p];
      out[p] = reduce(column);
    }
  });
  return out;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ImageGrid::ImageGrid(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), 0.0);
}

ImageGrid::ImageGrid(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (element_count(shape_) != data_.size())
    throw InvalidInput("grid data length " + std::to_string(data_.size()) +
                       " does not match shape");
  for (double v : data_)
    if (!std::isfinite(v)) throw InvalidInput("grid intensities must be finite");
}

std::vector<std::size_t> ImageGrid::strides() const {
  std::vector<std::size_t> s(shape_.size(), 1);
  for (std::size_t a = shape_.size(); a-- > 1;) s[a - 1] = s[a] * shape_[a];
  return s;
}

std::size_t ImageGrid::index(std::span<const std::size_t> coords) const {
  std::size_t idx = 0;
  for (std::size_t a = 0; a < shape_.size(); ++a) idx = idx * shape_[a] + coords[a];
  return idx;
}

double ImageGrid::min() const { return *std::min_element(data_.begin(), data_.end()); }
double ImageGrid::max() const { return *std::max_element(data_.begin(), data_.end()); }

ImageStack::ImageStack(std::vector<ImageGrid> images) : images_(std::move(images)) {
  if (images_.empty()) throw InvalidInput("image stack is empty");
  for (const auto& im : images_)
    if (im.shape() != images_.front().shape())
      throw InvalidInput("all images in a stack must share one shape");
}

const Shape& ImageStack::shape() const {
  if (images_.empty()) throw InvalidInput("image stack is empty");
  return images_.front().shape();
}

double sample_linear(const ImageGrid& grid, std::span<const double> point) {
  const std::size_t d = grid.dim();
  if (point.size() != d) throw InvalidInput("sample point dimension mismatch");
  std::size_t base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (std::size_t a = 0; a < d; ++a) {
    const double x = point[a];
    if (!std::isfinite(x)) throw InvalidInput("sample point must be finite");
    const double upper = static_cast<double>(grid.shape()[a] - 1);
    if (x < 0.0 || x > upper) return 0.0;
    double cell = std::floor(x);
    if (cell >= upper) cell = upper > 0.0 ? upper - 1.0 : 0.0;
    base[a] = static_cast<std::size_t>(cell);
    frac[a] = x - cell;
  }
  std::size_t strides[3] = {1, 1, 1};
  for (std::size_t a = d; a-- > 1;) strides[a - 1] = strides[a] * grid.shape()[a];
  double acc = 0.0;
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    bool skip = false;
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1u;
      if (up) {
        if (frac[a] == 0.0) { skip = true; break; }
        w *= frac[a];
        idx += (base[a] + 1) * strides[a];
      } else {
        w *= 1.0 - frac[a];
        idx += base[a] * strides[a];
      }
    }
    if (!skip) acc += w * grid[idx];
  }
  return acc;
}

QuantilePair quantile_pair_inplace(std::span<double> values, double p0, double p1) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  check_probabilities(p0, p1);
  std::sort(values.begin(), values.end());
  return {interpolated_order_statistic(values, p0), interpolated_order_statistic(values, p1)};
}

QuantilePair quantile_pair(std::span<const double> values, double p0, double p1) {
  std::vector<double> copy(values.begin(), values.end());
  return quantile_pair_inplace(copy, p0, p1);
}

ImageGrid pixelwise_quantile_range(const ImageStack& stack, double p0, double p1) {
  check_probabilities(p0, p1);
  return reduce_pixelwise(stack, [&](std::span<double> column) {
    const auto q = quantile_pair_inplace(column, p0, p1);
    return std::max(0.0, q.q1 - q.q0);
  });
}

ImageGrid pixelwise_mean(const ImageStack& stack) {
  return reduce_pixelwise(stack, [](std::span<double> column) {
    double s = 0.0;
    for (double v : column) s += v;
    return s / static_cast<double>(column.size());
  });
}

ImageGrid pixelwise_median(const ImageStack& stack) {
  return reduce_pixelwise(stack, [](std::span<double> column) {
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    return n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  });
}

}  // namespace tres
