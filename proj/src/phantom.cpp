#include "tres/phantom.hpp"

#include <Eigen/LU>
#include <cmath>

#include "tres/error.hpp"
#include "tres/model.hpp"
#include "tres/registration.hpp"

namespace tres {
namespace {

double ellipsoid(double x, double y, double z, double a, double b, double c) {
  return (x * x) / (a * a) + (y * y) / (b * b) + (z * z) / (c * c);
}

}  // namespace

ImageGrid ellipsoid_phantom(std::size_t size) {
  if (size < 4) throw InvalidInput("phantom size must be at least 4");
  ImageGrid g({size, size, size});
  const double c = 0.5 * static_cast<double>(size - 1);
  const double h = 0.5 * static_cast<double>(size);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = (static_cast<double>(i) - c) / h;
    for (std::size_t j = 0; j < size; ++j) {
      const double y = (static_cast<double>(j) - c) / h;
      for (std::size_t k = 0; k < size; ++k, ++idx) {
        const double z = (static_cast<double>(k) - c) / h;
        double v = 0.0;
        if (ellipsoid(x, y, z, 0.75, 0.6, 0.5) <= 1.0) {
          v = ellipsoid(x, y, z, 0.6, 0.48, 0.4) <= 1.0 ? 0.4 : 1.0;
          if (ellipsoid(x - 0.2, y - 0.1, z, 0.14, 0.14, 0.14) <= 1.0) v = 0.0;
          if (ellipsoid(x + 0.25, y + 0.05, z - 0.05, 0.1, 0.1, 0.1) <= 1.0) v = 0.0;
        }
        g[idx] = v;
      }
    }
  }
  return g;
}

ImageStack phantom_stack(const PhantomStackSpec& spec) {
  if (spec.n < 1) throw InvalidInput("phantom stack needs at least one image");
  if (!(spec.matrix_scale >= 0.0 && spec.matrix_scale <= 0.25) || !(spec.shift_scale >= 0.0))
    throw InvalidInput("perturbation scales out of range");
  const ImageGrid base = ellipsoid_phantom(spec.size);
  CounterRng rng(spec.seed);
  std::vector<ImageGrid> images;
  images.reserve(spec.n);
  while (images.size() < spec.n) {
    Matrix a = Matrix::Identity(3, 3);
    Vector b(3);
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = 0; c < 3; ++c) a(r, c) += spec.matrix_scale * rng.next_normal();
    for (Eigen::Index r = 0; r < 3; ++r) b(r) = spec.shift_scale * rng.next_normal();
    // Draws far from the identity are skipped; the sequence stays seeded.
    if (std::abs(a.determinant() - 1.0) > 0.5) continue;
    images.push_back(warp(base, Transform::affine(a, b)));
  }
  return ImageStack(std::move(images));
}

}  // namespace tres
