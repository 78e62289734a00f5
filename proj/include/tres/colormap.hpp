#pragma once

#include <array>
#include <cstdint>

namespace tres {

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

extern const std::array<Rgb8, 256> kViridis;

/// Maps t in [0, 1] onto the 256-entry viridis table (nearest entry, clamped).
Rgb8 viridis(double t);

}  // namespace tres
