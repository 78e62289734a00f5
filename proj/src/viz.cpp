#include "tres/viz.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tres/colormap.hpp"
#include "tres/error.hpp"
#include "tres/smoothing.hpp"

namespace tres {
namespace {

std::pair<std::size_t, std::size_t> plane_axes(std::size_t slice_axis) {
  switch (slice_axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

void check_slice(const ImageGrid& grid, const std::optional<SliceSpec>& slice) {
  if (grid.dim() == 3) {
    if (!slice) throw InvalidInput("a slice (axis:index) is required for 3D grids");
    if (slice->axis > 2 || slice->index >= grid.shape()[slice->axis])
      throw InvalidInput("slice lies outside the grid");
  } else if (slice) {
    throw InvalidInput("slices apply only to 3D grids");
  }
}

std::string hex_color(Rgb8 c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void append_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void append_chunk(std::string& out, const char* type, const std::string& data) {
  append_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  append_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

SliceSpec parse_slice_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("slice must look like axis:index");
  try {
    std::size_t used = 0;
    const auto axis = std::stoul(text.substr(0, colon), &used);
    if (used != colon) throw InvalidInput("bad slice axis");
    const std::string rest = text.substr(colon + 1);
    const auto index = std::stoul(rest, &used);
    if (used != rest.size()) throw InvalidInput("bad slice index");
    return {axis, index};
  } catch (const std::logic_error&) {
    throw InvalidInput("slice must look like axis:index, got '" + text + "'");
  }
}

ImageGrid extract_plane(const ImageGrid& grid, const std::optional<SliceSpec>& slice) {
  check_slice(grid, slice);
  if (grid.dim() == 2) return grid;
  if (grid.dim() == 1) {
    std::vector<double> v(grid.values().begin(), grid.values().end());
    return ImageGrid({1, grid.size()}, std::move(v));
  }
  const auto [ra, ca] = plane_axes(slice->axis);
  const std::size_t rows = grid.shape()[ra];
  const std::size_t cols = grid.shape()[ca];
  ImageGrid out({rows, cols});
  std::size_t coords[3];
  coords[slice->axis] = slice->index;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      coords[ra] = r;
      coords[ca] = c;
      out[r * cols + c] = grid.at(coords);
    }
  }
  return out;
}

std::vector<ImageGrid> template_gradient(const ImageGrid& tmpl, double sigma_g) {
  std::vector<ImageGrid> grad;
  for (std::size_t a = 0; a < tmpl.dim(); ++a) grad.push_back(gaussian_derivative(tmpl, sigma_g, a));
  return grad;
}

BarOverlay build_overlay(const ImageGrid& tmpl, const ImageGrid& sigma_star,
                         const OverlayOptions& opts) {
  if (tmpl.shape() != sigma_star.shape())
    throw InvalidInput("template and sigma* must have the same shape");
  check_slice(tmpl, opts.slice);
  const std::size_t stride = opts.stride.value_or(tmpl.dim() == 3 ? 3 : 2);
  if (stride < 1) throw InvalidInput("stride must be at least 1");
  const double eps = opts.eps_grad.value_or(1e-3 * (tmpl.max() - tmpl.min()));

  const auto grad = template_gradient(tmpl, opts.sigma_g);
  BarOverlay overlay;
  overlay.slice = opts.slice;

  // Components of the gradient that lie in the displayed plane, as (row, col).
  ImageGrid g_row, g_col;
  if (tmpl.dim() == 1) {
    g_row = ImageGrid({1, tmpl.size()});
    g_col = extract_plane(grad[0], std::nullopt);
  } else if (tmpl.dim() == 2) {
    g_row = grad[0];
    g_col = grad[1];
  } else {
    const auto [ra, ca] = plane_axes(opts.slice->axis);
    g_row = extract_plane(grad[ra], opts.slice);
    g_col = extract_plane(grad[ca], opts.slice);
  }
  const ImageGrid sig = extract_plane(sigma_star, opts.slice);
  overlay.rows = sig.shape()[0];
  overlay.cols = sig.shape()[1];

  for (std::size_t r = 0; r < overlay.rows; r += stride) {
    for (std::size_t c = 0; c < overlay.cols; c += stride) {
      const std::size_t p = r * overlay.cols + c;
      const double s = sig[p];
      if (!(s > 0.0)) continue;
      const double gr = g_row[p];
      const double gc = g_col[p];
      const double norm = std::hypot(gr, gc);
      if (!(norm > 0.0) || norm < eps) continue;
      Bar bar;
      bar.center = {static_cast<double>(r), static_cast<double>(c)};
      bar.direction = {gr / norm, gc / norm};
      bar.half_length = s;
      bar.value = s;
      overlay.bars.push_back(bar);
    }
  }
  return overlay;
}

std::string encode_png_gray(const ImageGrid& plane) {
  if (plane.dim() != 2) throw InvalidInput("PNG encoding needs a 2D plane");
  const std::size_t rows = plane.shape()[0];
  const std::size_t cols = plane.shape()[1];
  const double lo = plane.min();
  const double span = plane.max() - lo;
  std::string raw;
  raw.reserve(rows * (cols + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    raw.push_back('\0');  // filter type: none
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = span > 0.0 ? (plane[r * cols + c] - lo) / span : 0.0;
      raw.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  append_u32_be(ihdr, static_cast<std::uint32_t>(cols));
  append_u32_be(ihdr, static_cast<std::uint32_t>(rows));
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit grayscale, no interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", packed);
  append_chunk(png, "IEND", "");
  return png;
}

std::string base64_encode(const std::string& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string render_overlay_svg(const ImageGrid& tmpl, const BarOverlay& overlay,
                               std::pair<double, double> colormap_range) {
  const ImageGrid plane = extract_plane(tmpl, overlay.slice);
  const double rows = static_cast<double>(plane.shape()[0]);
  const double cols = static_cast<double>(plane.shape()[1]);
  const auto [lo, hi] = colormap_range;
  const double span = hi - lo;
  auto color_of = [&](double v) { return viridis(span > 0.0 ? (v - lo) / span : 0.0); };

  // Legend column to the right of the image, in the same pixel units.
  const double legend_x = cols + 1.0;
  const double legend_w = std::max(1.0, 0.06 * rows);
  const double font = std::max(1.0, 0.05 * rows);
  const double total_w = legend_x + legend_w + 5.0 * font;
  constexpr double kScreenScale = 16.0;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\"";
  svg += " width=\"" + num(total_w * kScreenScale) + "\" height=\"" + num(rows * kScreenScale) + "\"";
  svg += " viewBox=\"-0.5 -0.5 " + num(total_w) + " " + num(rows) + "\">\n";
  svg += "<image x=\"-0.5\" y=\"-0.5\" width=\"" + num(cols) + "\" height=\"" + num(rows) +
         "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" xlink:href=\"data:image/png;base64," +
         base64_encode(encode_png_gray(plane)) + "\"/>\n";
  svg += "<g id=\"bars\" stroke-width=\"0.25\" stroke-linecap=\"butt\">\n";
  for (const auto& bar : overlay.bars) {
    // SVG x is the column, y the row.
    const double dx = bar.direction[1] * bar.half_length;
    const double dy = bar.direction[0] * bar.half_length;
    svg += "<line x1=\"" + num(bar.center[1] - dx) + "\" y1=\"" + num(bar.center[0] - dy) +
           "\" x2=\"" + num(bar.center[1] + dx) + "\" y2=\"" + num(bar.center[0] + dy) +
           "\" stroke=\"" + hex_color(color_of(bar.value)) + "\"/>\n";
  }
  svg += "</g>\n";

  svg += "<g id=\"legend\">\n";
  constexpr int kLegendSteps = 32;
  const double cell = rows / kLegendSteps;
  for (int k = 0; k < kLegendSteps; ++k) {
    // Top of the bar is the high end of the range.
    const double t = 1.0 - (k + 0.5) / kLegendSteps;
    svg += "<rect x=\"" + num(legend_x - 0.5) + "\" y=\"" + num(k * cell - 0.5) + "\" width=\"" +
           num(legend_w) + "\" height=\"" + num(cell) + "\" fill=\"" + hex_color(viridis(t)) +
           "\"/>\n";
  }
  const double text_x = legend_x + legend_w;
  svg += "<text x=\"" + num(text_x) + "\" y=\"" + num(font - 0.5) + "\" font-size=\"" + num(font) +
         "\" font-family=\"sans-serif\">" + num(hi) + "</text>\n";
  svg += "<text x=\"" + num(text_x) + "\" y=\"" + num(rows - 0.5) + "\" font-size=\"" + num(font) +
         "\" font-family=\"sans-serif\">" + num(lo) + "</text>\n";
  svg += "<text x=\"" + num(text_x) + "\" y=\"" + num(0.5 * rows) + "\" font-size=\"" + num(font) +
         "\" font-family=\"sans-serif\">&#963;* [px]</text>\n";
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_heatmap(const ImageGrid& field, const std::optional<SliceSpec>& slice) {
  if (field.empty()) throw InvalidInput("cannot render an empty field");
  const ImageGrid plane = extract_plane(field, slice);
  const std::size_t rows = plane.shape()[0];
  const std::size_t cols = plane.shape()[1];
  const double lo = plane.min();
  const double span = plane.max() - lo;
  std::string out = "P6\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  out.reserve(out.size() + 3 * plane.size());
  for (double v : plane.values()) {
    const Rgb8 c = viridis(span > 0.0 ? (v - lo) / span : 0.0);
    out.push_back(static_cast<char>(c.r));
    out.push_back(static_cast<char>(c.g));
    out.push_back(static_cast<char>(c.b));
  }
  return out;
}

}  // namespace tres
