#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace tres {

enum class TransformKind { Affine, Rigid };

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Spatial map x -> A x + b acting on grid-centered coordinates.
///
/// Coordinates are measured from the grid center c = (extent - 1) / 2 on every
/// axis, so a rigid rotation turns the image about its center. Rigid
/// transforms keep their angles and regenerate A from them, which makes A
/// orthogonal by construction (2D: one angle; 3D: A = Rz Ry Rx; 1D: A = 1).
class Transform {
 public:
  static Transform identity(TransformKind kind, std::size_t dim);
  /// Throws InvalidTransform when |det A| <= 1e-8.
  static Transform affine(const Matrix& a, const Vector& b);
  static Transform rigid(std::span<const double> angles, const Vector& b);
  static Transform translation(const Vector& b);

  /// Number of free parameters: d^2 + d (affine) or angles + d (rigid).
  static std::size_t parameter_count(TransformKind kind, std::size_t dim);
  static std::size_t angle_count(std::size_t dim);
  /// Affine: row-major A followed by b. Rigid: angles followed by b.
  std::vector<double> parameters() const;
  static Transform from_parameters(TransformKind kind, std::size_t dim,
                                   std::span<const double> params);

  TransformKind kind() const { return kind_; }
  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  const Matrix& matrix() const { return a_; }
  const Vector& translation() const { return b_; }
  const std::vector<double>& angles() const { return angles_; }
  double determinant() const;

  Vector apply(const Vector& x) const { return a_ * x + b_; }
  Vector apply_inverse(const Vector& y) const;
  /// Inverse map. The inverse of a rigid transform is returned as an affine
  /// transform with orthogonal matrix.
  Transform inverse() const;
  /// this o other
  Transform compose(const Transform& other) const;

 private:
  TransformKind kind_ = TransformKind::Affine;
  Matrix a_;
  Vector b_;
  std::vector<double> angles_;
};

Matrix rotation_matrix(std::span<const double> angles, std::size_t dim);

/// ||A - I||_F^2 + ||b||^2
double regularizer(const Transform& t);

}  // namespace tres
