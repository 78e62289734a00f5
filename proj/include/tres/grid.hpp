#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace tres {

using Shape = std::vector<std::size_t>;

/// Scalar field on a regular grid of dimension 1, 2 or 3.
///
/// Storage is row-major with the last axis varying fastest. Pixel centers sit
/// at integer coordinates with unit spacing, so every length in the library is
/// measured in pixels.
class ImageGrid {
 public:
  ImageGrid() = default;
  /// Zero-filled grid.
  explicit ImageGrid(Shape shape);
  /// Takes ownership of `data`; throws InvalidInput if sizes disagree or any
  /// value is non-finite.
  ImageGrid(Shape shape, std::vector<double> data);

  std::size_t dim() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Row-major strides in elements.
  std::vector<std::size_t> strides() const;
  std::size_t index(std::span<const std::size_t> coords) const;
  double at(std::span<const std::size_t> coords) const { return data_[index(coords)]; }

  double min() const;
  double max() const;

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Non-empty ordered collection of grids sharing one shape.
class ImageStack {
 public:
  ImageStack() = default;
  explicit ImageStack(std::vector<ImageGrid> images);

  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }

  const ImageGrid& operator[](std::size_t i) const { return images_[i]; }
  const std::vector<ImageGrid>& images() const { return images_; }

  auto begin() const { return images_.begin(); }
  auto end() const { return images_.end(); }

 private:
  std::vector<ImageGrid> images_;
};

std::size_t element_count(const Shape& shape);

/// Multilinear interpolation with zero extension: any coordinate outside
/// [0, extent - 1] yields 0.
double sample_linear(const ImageGrid& grid, std::span<const double> point);

struct QuantilePair {
  double q0 = 0.0;
  double q1 = 0.0;
};

/// Empirical quantiles by linear interpolation between order statistics at
/// position h = p (n - 1). `values` is reordered in place.
QuantilePair quantile_pair_inplace(std::span<double> values, double p0, double p1);
QuantilePair quantile_pair(std::span<const double> values, double p0, double p1);

/// Per-pixel q1 - q0 across the stack.
ImageGrid pixelwise_quantile_range(const ImageStack& stack, double p0, double p1);

/// Per-pixel mean and median across the stack (median of an even count is the
/// midpoint of the two central order statistics).
ImageGrid pixelwise_mean(const ImageStack& stack);
ImageGrid pixelwise_median(const ImageStack& stack);

}  // namespace tres
