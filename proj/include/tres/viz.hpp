#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tres/grid.hpp"

namespace tres {

/// Plane of a 3D grid: the axis held fixed and its index.
struct SliceSpec {
  std::size_t axis = 0;
  std::size_t index = 0;
};

/// Parses "axis:index", e.g. "2:16".
SliceSpec parse_slice_spec(const std::string& text);

/// 2D view of a grid: the grid itself in 2D, a 1 x N row in 1D, the requested
/// plane in 3D. Rows follow the lower remaining axis, columns the higher.
ImageGrid extract_plane(const ImageGrid& grid, const std::optional<SliceSpec>& slice);

struct Bar {
  std::array<double, 2> center{};     ///< (row, column) in plane pixel coordinates
  std::array<double, 2> direction{};  ///< unit vector in (row, column) order
  double half_length = 0.0;           ///< sigma* in pixels
  double value = 0.0;                 ///< sigma* for the colormap
};

struct BarOverlay {
  std::vector<Bar> bars;
  std::optional<SliceSpec> slice;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Gradient components (one grid per axis) via Gaussian derivative filters.
std::vector<ImageGrid> template_gradient(const ImageGrid& tmpl, double sigma_g);

struct OverlayOptions {
  double sigma_g = 1.0;
  /// Defaults to 1e-3 times the template intensity range.
  std::optional<double> eps_grad;
  /// Defaults to 2 (1D/2D) or 3 (3D slices).
  std::optional<std::size_t> stride;
  std::optional<SliceSpec> slice;
};

/// One bar per stride-sampled pixel with sigma* > 0 and (in-plane) gradient
/// norm >= eps_grad, centered at the pixel along the normalized gradient.
BarOverlay build_overlay(const ImageGrid& tmpl, const ImageGrid& sigma_star,
                         const OverlayOptions& opts = {});

/// SVG document: grayscale template as an embedded PNG, one <line> per bar of
/// length 2 half_length, colored by value over `colormap_range`, plus a legend.
std::string render_overlay_svg(const ImageGrid& tmpl, const BarOverlay& overlay,
                               std::pair<double, double> colormap_range);

/// Binary PPM (P6) of the field (or its slice) with min-max viridis mapping.
std::string render_heatmap(const ImageGrid& field, const std::optional<SliceSpec>& slice = {});

/// 8-bit grayscale PNG, min-max scaled (constant images map to 0).
std::string encode_png_gray(const ImageGrid& plane);

std::string base64_encode(const std::string& bytes);

}  // namespace tres
