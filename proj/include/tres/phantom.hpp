#pragma once

#include <cstddef>
#include <cstdint>

#include "tres/grid.hpp"

namespace tres {

/// Ellipsoid shell (intensity 1) around a dimmer interior (0.4) with two
/// empty spherical cavities, on a size^3 grid.
ImageGrid ellipsoid_phantom(std::size_t size);

struct PhantomStackSpec {
  std::size_t n = 8;
  std::size_t size = 32;
  /// Standard deviation of the entries of A - I.
  double matrix_scale = 0.05;
  /// Standard deviation of each translation component, pixels.
  double shift_scale = 1.0;
  std::uint64_t seed = 0;
};

/// n copies of the phantom, each warped by its own random affine map.
ImageStack phantom_stack(const PhantomStackSpec& spec);

}  // namespace tres
