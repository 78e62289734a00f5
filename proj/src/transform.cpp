#include "tres/transform.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

#include "tres/error.hpp"

namespace tres {
namespace {

constexpr double kMinAbsDet = 1e-8;

void check_dim(std::size_t dim) {
  if (dim < 1 || dim > 3) throw InvalidInput("transform dimension must be 1, 2 or 3");
}

}  // namespace

Matrix rotation_matrix(std::span<const double> angles, std::size_t dim) {
  check_dim(dim);
  if (angles.size() != Transform::angle_count(dim))
    throw InvalidInput("rotation needs " + std::to_string(Transform::angle_count(dim)) +
                       " angle(s) in " + std::to_string(dim) + "D");
  if (dim == 1) return Matrix::Identity(1, 1);
  if (dim == 2) {
    const double c = std::cos(angles[0]);
    const double s = std::sin(angles[0]);
    Matrix r(2, 2);
    r << c, -s, s, c;
    return r;
  }
  const double cx = std::cos(angles[0]), sx = std::sin(angles[0]);
  const double cy = std::cos(angles[1]), sy = std::sin(angles[1]);
  const double cz = std::cos(angles[2]), sz = std::sin(angles[2]);
  Matrix rx(3, 3), ry(3, 3), rz(3, 3);
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rz * ry * rx;
}

std::size_t Transform::angle_count(std::size_t dim) {
  return dim == 2 ? 1 : dim == 3 ? 3 : 0;
}

std::size_t Transform::parameter_count(TransformKind kind, std::size_t dim) {
  return kind == TransformKind::Affine ? dim * dim + dim : angle_count(dim) + dim;
}

Transform Transform::identity(TransformKind kind, std::size_t dim) {
  check_dim(dim);
  Transform t;
  t.kind_ = kind;
  t.a_ = Matrix::Identity(dim, dim);
  t.b_ = Vector::Zero(dim);
  if (kind == TransformKind::Rigid) t.angles_.assign(angle_count(dim), 0.0);
  return t;
}

Transform Transform::affine(const Matrix& a, const Vector& b) {
  const auto dim = static_cast<std::size_t>(b.size());
  check_dim(dim);
  if (a.rows() != b.size() || a.cols() != b.size())
    throw InvalidInput("affine matrix and translation dimensions disagree");
  if (!a.allFinite() || !b.allFinite()) throw InvalidTransform("transform entries must be finite");
  if (!(std::abs(a.determinant()) > kMinAbsDet))
    throw InvalidTransform("affine matrix is not invertible");
  Transform t;
  t.kind_ = TransformKind::Affine;
  t.a_ = a;
  t.b_ = b;
  return t;
}

Transform Transform::rigid(std::span<const double> angles, const Vector& b) {
  const auto dim = static_cast<std::size_t>(b.size());
  if (!b.allFinite()) throw InvalidTransform("transform entries must be finite");
  for (double a : angles)
    if (!std::isfinite(a)) throw InvalidTransform("rotation angles must be finite");
  Transform t;
  t.kind_ = TransformKind::Rigid;
  t.a_ = rotation_matrix(angles, dim);
  t.b_ = b;
  t.angles_.assign(angles.begin(), angles.end());
  return t;
}

Transform Transform::translation(const Vector& b) {
  return affine(Matrix::Identity(b.size(), b.size()), b);
}

std::vector<double> Transform::parameters() const {
  std::vector<double> p;
  const std::size_t d = dim();
  if (kind_ == TransformKind::Affine) {
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) p.push_back(a_(r, c));
  } else {
    p = angles_;
  }
  for (std::size_t r = 0; r < d; ++r) p.push_back(b_(r));
  return p;
}

Transform Transform::from_parameters(TransformKind kind, std::size_t dim,
                                     std::span<const double> params) {
  check_dim(dim);
  if (params.size() != parameter_count(kind, dim))
    throw InvalidInput("wrong number of transform parameters");
  Vector b(dim);
  const std::size_t offset = params.size() - dim;
  for (std::size_t r = 0; r < dim; ++r) b(r) = params[offset + r];
  if (kind == TransformKind::Rigid) return rigid(params.first(offset), b);
  Matrix a(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c) a(r, c) = params[r * dim + c];
  return affine(a, b);
}

double Transform::determinant() const { return a_.determinant(); }

Vector Transform::apply_inverse(const Vector& y) const { return a_.inverse() * (y - b_); }

Transform Transform::inverse() const {
  const Matrix inv = a_.inverse();
  return affine(inv, -inv * b_);
}

Transform Transform::compose(const Transform& other) const {
  if (other.dim() != dim()) throw InvalidInput("cannot compose transforms of different dimension");
  if (kind_ == TransformKind::Rigid && other.kind_ == TransformKind::Rigid && dim() == 2)
    return rigid(std::vector<double>{angles_[0] + other.angles_[0]}, a_ * other.b_ + b_);
  if (kind_ == TransformKind::Rigid && other.kind_ == TransformKind::Rigid && dim() == 1)
    return rigid({}, a_ * other.b_ + b_);
  return affine(a_ * other.a_, a_ * other.b_ + b_);
}

double regularizer(const Transform& t) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  return (t.matrix() - Matrix::Identity(d, d)).squaredNorm() + t.translation().squaredNorm();
}

}  // namespace tres
