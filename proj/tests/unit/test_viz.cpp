#include <gtest/gtest.h>
#include <zlib.h>

#include <cmath>
#include <regex>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tres/colormap.hpp"
#include "tres/error.hpp"
#include "tres/viz.hpp"

using namespace tres;

namespace {

ImageGrid ramp(std::size_t n, double a, double b) {
  ImageGrid g({n, n});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) g[r * n + c] = a * static_cast<double>(r) + b * static_cast<double>(c);
  return g;
}

ImageGrid rotate90(const ImageGrid& g) {
  // (r, c) -> (c, n - 1 - r)
  const std::size_t n = g.shape()[0];
  ImageGrid out({n, n});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out[c * n + (n - 1 - r)] = g[r * n + c];
  return out;
}

/// Minimal markup check: tags nest and close, attribute quotes balance.
bool well_formed(const std::string& doc) {
  std::vector<std::string> open;
  std::size_t pos = 0;
  while ((pos = doc.find('<', pos)) != std::string::npos) {
    const std::size_t end = doc.find('>', pos);
    if (end == std::string::npos) return false;
    std::string tag = doc.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (open.empty() || open.back() != tag.substr(1)) return false;
      open.pop_back();
    } else if (tag.back() != '/') {
      open.push_back(tag.substr(0, tag.find_first_of(" \n")));
    }
  }
  return open.empty();
}

struct Line {
  double x1, y1, x2, y2;
};

std::vector<Line> lines_of(const std::string& svg) {
  static const std::regex re(
      R"re(<line x1="([^"]+)" y1="([^"]+)" x2="([^"]+)" y2="([^"]+)")re");
  std::vector<Line> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back({std::stod((*it)[1]), std::stod((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4])});
  return out;
}

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (std::uint32_t(std::uint8_t(s[at])) << 24) | (std::uint32_t(std::uint8_t(s[at + 1])) << 16) |
         (std::uint32_t(std::uint8_t(s[at + 2])) << 8) | std::uint32_t(std::uint8_t(s[at + 3]));
}

std::string base64_decode(const std::string& in) {
  static const std::string alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  int val = 0, bits = -8;
  for (char ch : in) {
    if (ch == '=') break;
    val = (val << 6) + static_cast<int>(alphabet.find(ch));
    bits += 6;
    if (bits >= 0) {
      out.push_back(static_cast<char>((val >> bits) & 0xFF));
      bits -= 8;
    }
  }
  return out;
}

}  // namespace

TEST(SliceSpec, Parses) {
  const auto s = parse_slice_spec("2:16");
  EXPECT_EQ(s.axis, 2u);
  EXPECT_EQ(s.index, 16u);
  EXPECT_THROW(parse_slice_spec("2"), InvalidInput);
  EXPECT_THROW(parse_slice_spec("a:1"), InvalidInput);
  EXPECT_THROW(parse_slice_spec("1:x"), InvalidInput);
}

TEST(TemplateGradient, ConstantIsZeroInInterior) {
  const ImageGrid c({20, 20}, std::vector<double>(400, 3.0));
  const auto g = template_gradient(c, 1.0);
  ASSERT_EQ(g.size(), 2u);
  for (std::size_t r = 5; r < 15; ++r)
    for (std::size_t k = 5; k < 15; ++k) {
      EXPECT_NEAR(g[0][r * 20 + k], 0.0, 1e-12);
      EXPECT_NEAR(g[1][r * 20 + k], 0.0, 1e-12);
    }
}

TEST(TemplateGradient, AxisZeroVariationGivesAxisZeroGradient) {
  const auto g = template_gradient(ramp(21, 2.0, 0.0), 1.0);
  for (std::size_t r = 5; r < 16; ++r)
    for (std::size_t c = 5; c < 16; ++c) {
      EXPECT_NEAR(g[0][r * 21 + c], 2.0, 1e-9);
      EXPECT_NEAR(g[1][r * 21 + c], 0.0, 1e-12);
    }
  EXPECT_THROW(template_gradient(ramp(5, 1, 1), 0.0), InvalidInput);
}

TEST(TemplateGradient, SmoothedEdgePeaksAtCrest) {
  std::vector<double> f(64);
  for (std::size_t x = 0; x < 64; ++x) f[x] = x < 32 ? 1.0 : 0.0;
  const auto g = template_gradient(ImageGrid({64}, f), 2.0)[0];

  // Independent derivative weights -k K(k) / sum k^2 K(k).
  const auto k = oracle::dense_kernel(2.0);
  const int r = static_cast<int>(k.size() / 2);
  double m2 = 0.0;
  for (int j = -r; j <= r; ++j) m2 += j * j * k[j + r];
  std::vector<double> wd(k.size());
  for (int j = -r; j <= r; ++j) wd[j + r] = -j * k[j + r] / m2;
  const auto expected = oracle::dense_convolve(f, wd);
  for (std::size_t x = 0; x < 64; ++x) EXPECT_NEAR(g[x], expected[x], 1e-12);

  std::size_t arg = 8;
  for (std::size_t x = 8; x < 56; ++x)
    if (std::abs(g[x]) > std::abs(g[arg])) arg = x;
  // Crest lies between pixels 31 and 32.
  EXPECT_TRUE(arg == 31 || arg == 32) << arg;
  EXPECT_LT(g[arg], 0.0);
}

TEST(BuildOverlay, EmptyWhenSigmaZero) {
  const auto o = build_overlay(ramp(10, 1, 1), ImageGrid({10, 10}));
  EXPECT_TRUE(o.bars.empty());
}

TEST(BuildOverlay, SingleBarFromNormalizedGradient) {
  const auto t = ramp(21, 3.0, 4.0);
  ImageGrid s({21, 21});
  s[10 * 21 + 10] = 2.0;
  OverlayOptions opts;
  opts.stride = 1;
  const auto o = build_overlay(t, s, opts);
  ASSERT_EQ(o.bars.size(), 1u);
  EXPECT_NEAR(o.bars[0].direction[0], 0.6, 1e-9);
  EXPECT_NEAR(o.bars[0].direction[1], 0.8, 1e-9);
  EXPECT_EQ(o.bars[0].half_length, 2.0);
  EXPECT_EQ(o.bars[0].center[0], 10.0);
  EXPECT_EQ(o.bars[0].center[1], 10.0);
}

TEST(BuildOverlay, BarCountBoundedAndUnitDirections) {
  auto t = ramp(30, 0.3, -0.2);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] += std::sin(0.37 * static_cast<double>(k));
  ImageGrid s({30, 30});
  std::size_t sampled_positive = 0;
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 0; c < 30; ++c) {
      s[r * 30 + c] = (r + c) % 5 == 0 ? 0.0 : 0.1 * static_cast<double>(r);
      if (r % 2 == 0 && c % 2 == 0 && s[r * 30 + c] > 0) ++sampled_positive;
    }
  const auto o = build_overlay(t, s);
  EXPECT_LE(o.bars.size(), sampled_positive);
  EXPECT_GT(o.bars.size(), 0u);
  for (const auto& b : o.bars) EXPECT_NEAR(std::hypot(b.direction[0], b.direction[1]), 1.0, 1e-9);
}

TEST(BuildOverlay, NoBarsBelowGradientThreshold) {
  const auto t = ramp(16, 1e-4, 0.0);
  const ImageGrid s({16, 16}, std::vector<double>(256, 1.0));
  OverlayOptions opts;
  opts.eps_grad = 1e-3;
  EXPECT_TRUE(build_overlay(t, s, opts).bars.empty());
  opts.eps_grad = 1e-5;
  EXPECT_FALSE(build_overlay(t, s, opts).bars.empty());
}

TEST(BuildOverlay, RotationByQuarterTurnRotatesDirections) {
  const std::size_t n = 21;
  ImageGrid t({n, n}), s({n, n});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double y = static_cast<double>(r) - 8.0, x = static_cast<double>(c) - 12.0;
      t[r * n + c] = std::exp(-(y * y / 18.0 + x * x / 40.0));
      s[r * n + c] = 1.0 + 0.1 * static_cast<double>(r);
    }
  const auto a = build_overlay(t, s);
  const auto b = build_overlay(rotate90(t), rotate90(s));
  ASSERT_EQ(a.bars.size(), b.bars.size());
  for (const auto& bar : a.bars) {
    const double r = bar.center[0], c = bar.center[1];
    const double rr = c, cc = static_cast<double>(n - 1) - r;
    bool found = false;
    for (const auto& other : b.bars) {
      if (other.center[0] != rr || other.center[1] != cc) continue;
      found = true;
      // Row component becomes column component; column becomes negative row.
      EXPECT_NEAR(other.direction[0], bar.direction[1], 1e-9);
      EXPECT_NEAR(other.direction[1], -bar.direction[0], 1e-9);
      EXPECT_EQ(other.half_length, bar.half_length);
    }
    EXPECT_TRUE(found);
  }
}

TEST(BuildOverlay, SliceRules) {
  const std::size_t n = 16;
  ImageGrid vol({n, n, n}), s({n, n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t p = (i * n + j) * n + k;
        vol[p] = static_cast<double>(i);  // varies along axis 0 only
        // Keep bars away from the zero-extended border.
        const bool inner = i >= 5 && i < 11 && j >= 5 && j < 11 && k >= 5 && k < 11;
        s[p] = inner ? 1.0 : 0.0;
      }
  OverlayOptions opts;
  EXPECT_THROW(build_overlay(vol, s, opts), InvalidInput);
  opts.slice = SliceSpec{0, 7};
  opts.stride = 1;
  EXPECT_TRUE(build_overlay(vol, s, opts).bars.empty());  // gradient normal to the plane
  opts.slice = SliceSpec{2, 7};
  const auto o = build_overlay(vol, s, opts);
  EXPECT_EQ(o.bars.size(), 36u);
  EXPECT_EQ(o.rows, n);
  EXPECT_EQ(o.cols, n);
  for (const auto& b : o.bars) EXPECT_NEAR(b.direction[0], 1.0, 1e-9);
  opts.slice = SliceSpec{2, n};
  EXPECT_THROW(build_overlay(vol, s, opts), InvalidInput);

  OverlayOptions flat;
  flat.slice = SliceSpec{0, 0};
  EXPECT_THROW(build_overlay(ramp(5, 1, 0), ImageGrid({5, 5}), flat), InvalidInput);
  EXPECT_THROW(build_overlay(ramp(5, 1, 0), ImageGrid({5, 4}), {}), InvalidInput);
}

TEST(RenderOverlaySvg, EmptyOverlayHasBackgroundAndLegendOnly) {
  const auto t = ramp(12, 1, 0);
  const auto svg = render_overlay_svg(t, build_overlay(t, ImageGrid({12, 12})), {0.0, 1.0});
  EXPECT_TRUE(well_formed(svg));
  EXPECT_EQ(svg.find("<line"), std::string::npos);
  EXPECT_NE(svg.find("<image"), std::string::npos);
  EXPECT_NE(svg.find("id=\"legend\""), std::string::npos);
}

TEST(RenderOverlaySvg, BarLengthIsTwiceSigma) {
  const auto t = ramp(21, 3.0, 4.0);
  ImageGrid s({21, 21});
  s[10 * 21 + 10] = 2.0;
  s[4 * 21 + 6] = 1.37;
  OverlayOptions opts;
  opts.stride = 1;
  const auto o = build_overlay(t, s, opts);
  const auto svg = render_overlay_svg(t, o, {0.0, 2.0});
  EXPECT_TRUE(well_formed(svg));
  const auto lines = lines_of(svg);
  ASSERT_EQ(lines.size(), 2u);
  std::vector<double> lengths;
  for (const auto& l : lines) lengths.push_back(std::hypot(l.x2 - l.x1, l.y2 - l.y1));
  std::sort(lengths.begin(), lengths.end());
  EXPECT_NEAR(lengths[0], 2 * 1.37, 1e-6);
  EXPECT_NEAR(lengths[1], 4.0, 1e-6);
}

TEST(RenderOverlaySvg, EmbeddedRasterDecodes) {
  ImageGrid t({3, 4});
  for (std::size_t k = 0; k < 12; ++k) t[k] = static_cast<double>(k);
  const auto svg = render_overlay_svg(t, build_overlay(t, ImageGrid({3, 4})), {0.0, 1.0});
  const std::string key = "base64,";
  const auto at = svg.find(key) + key.size();
  const auto png = base64_decode(svg.substr(at, svg.find('"', at) - at));
  ASSERT_GT(png.size(), 33u);
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(png.substr(12, 4), "IHDR");
  EXPECT_EQ(be32(png, 16), 4u);
  EXPECT_EQ(be32(png, 20), 3u);
  // Walk chunks, check CRCs and inflate the image data.
  std::string idat;
  for (std::size_t pos = 8; pos < png.size();) {
    const std::uint32_t len = be32(png, pos);
    const std::string type = png.substr(pos + 4, 4);
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(png.data() + pos + 4), len + 4);
    EXPECT_EQ(crc, be32(png, pos + 8 + len)) << type;
    if (type == "IDAT") idat += png.substr(pos + 8, len);
    pos += 12 + len;
  }
  std::vector<unsigned char> raw(3 * 5);
  uLongf raw_len = raw.size();
  ASSERT_EQ(uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(idat.data()), idat.size()), Z_OK);
  ASSERT_EQ(raw_len, 15u);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(raw[r * 5], 0);  // filter type none
    for (std::size_t c = 0; c < 4; ++c)
      EXPECT_EQ(raw[r * 5 + 1 + c], static_cast<unsigned char>(std::lround(255.0 * (r * 4 + c) / 11.0)));
  }
}

TEST(Base64, KnownVectors) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foo"), "Zm9v");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(RenderHeatmap, ConstantFieldIsSingleColor) {
  const auto ppm = render_heatmap(ImageGrid({4, 5}, std::vector<double>(20, 7.0)));
  const std::string header = "P6\n5 4\n255\n";
  ASSERT_EQ(ppm.substr(0, header.size()), header);
  ASSERT_EQ(ppm.size(), header.size() + 60);
  for (std::size_t k = header.size(); k < ppm.size(); k += 3) EXPECT_EQ(ppm.substr(k, 3), ppm.substr(header.size(), 3));
}

TEST(RenderHeatmap, TwoValuedFieldUsesEndpointColors) {
  ImageGrid f({3, 3});
  for (std::size_t k = 0; k < 9; ++k) f[k] = k % 2 ? 5.0 : -1.0;
  const auto ppm = render_heatmap(f);
  const std::size_t h = std::string("P6\n3 3\n255\n").size();
  const Rgb8 lo = kViridis.front(), hi = kViridis.back();
  for (std::size_t k = 0; k < 9; ++k) {
    const Rgb8 want = k % 2 ? hi : lo;
    EXPECT_EQ(static_cast<std::uint8_t>(ppm[h + 3 * k]), want.r);
    EXPECT_EQ(static_cast<std::uint8_t>(ppm[h + 3 * k + 1]), want.g);
    EXPECT_EQ(static_cast<std::uint8_t>(ppm[h + 3 * k + 2]), want.b);
  }
}

TEST(RenderHeatmap, DimensionsFollowSlice) {
  const ImageGrid vol({4, 5, 6});
  EXPECT_EQ(render_heatmap(vol, SliceSpec{1, 2}).substr(0, 11), "P6\n6 4\n255\n");
  EXPECT_EQ(render_heatmap(ImageGrid({9})).substr(0, 11), "P6\n9 1\n255\n");
  EXPECT_THROW(render_heatmap(vol), InvalidInput);
  EXPECT_EQ(render_heatmap(vol, SliceSpec{0, 0}), render_heatmap(vol, SliceSpec{0, 0}));
}
