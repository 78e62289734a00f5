#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tres/grid.hpp"
#include "tres/transform.hpp"

namespace tres {

enum class Norm { L2, L1 };

/// Resampled image I o Psi^{-1}: output pixel y holds I(Psi^{-1}(y)) with
/// multilinear interpolation and zero extension.
ImageGrid warp(const ImageGrid& image, const Transform& t);

/// Sum of squared (L2) or absolute (L1) pixel differences.
double similarity(const ImageGrid& a, const ImageGrid& b, Norm norm);

/// similarity(warp(image, t), scale * target, norm) without materializing the
/// warped image.
double warped_similarity(const ImageGrid& image, const Transform& t, const ImageGrid& target,
                         double scale, Norm norm);

struct StepSchedule {
  double initial = 0.5;  ///< first trial step length, in pixels of displacement
  double grow = 2.0;     ///< factor after an accepted step
  double shrink = 0.5;   ///< factor after a rejected trial
  double max_step = 4.0;
  int max_backtracks = 12;
};

struct RegistrationConfig {
  TransformKind transform_kind = TransformKind::Affine;
  Norm norm = Norm::L2;
  double lambda = 1e-3;
  int outer_iterations = 50;
  int inner_steps = 4;
  StepSchedule step;
  bool fit_intensity_scale = false;
  /// Recorded with results; the optimizer itself is deterministic.
  std::uint64_t seed = 0;
  /// 1 = single resolution, 2 = one factor-2 coarse level first.
  int pyramid_levels = 2;
  /// Stop once |E_k - E_{k-1}| <= tolerance * |E_{k-1}|.
  double relative_tolerance = 1e-6;
  /// Central-difference step in scaled parameter units.
  double fd_step = 1e-3;
};

struct EnergyRecord {
  int level = 0;  ///< 0 = finest
  int iteration = 0;
  double energy = 0.0;
  std::size_t frozen = 0;   ///< images whose line search was exhausted
  bool accepted = true;     ///< false: step rejected, state unchanged
};

struct RegistrationResult {
  ImageGrid template_image;
  std::vector<Transform> transforms;
  ImageStack registered;
  std::vector<double> intensity_scales;
  std::vector<EnergyRecord> energy_trace;
};

/// Energy of one image against a fixed template:
/// similarity(I o Psi^{-1}, scale T) + lambda ||Psi^{-1}||_reg.
double image_energy(const ImageGrid& image, const Transform& t, const ImageGrid& target,
                    double scale, Norm norm, double lambda);

/// Total groupwise energy for given transforms, template and scales.
double groupwise_energy(const ImageStack& images, const std::vector<Transform>& transforms,
                        const ImageGrid& target, const std::vector<double>& scales, Norm norm,
                        double lambda);

/// Template minimizing the summed similarity for frozen registered images:
/// pixelwise mean / median, or their scale-weighted forms when scales differ
/// from one.
ImageGrid optimal_template(const ImageStack& registered, const std::vector<double>& scales,
                           Norm norm);

/// Scale c minimizing similarity(registered, c * target).
double optimal_intensity_scale(const ImageGrid& registered, const ImageGrid& target, Norm norm);

enum class Stencil { Central3, Central5 };

/// Finite-difference gradient of image_energy with respect to the scaled
/// transform parameters (translations in pixels; matrix entries and angles
/// multiplied by the grid half-extent).
std::vector<double> energy_gradient(const ImageGrid& image, const Transform& t,
                                    const ImageGrid& target, double scale, Norm norm,
                                    double lambda, double h, Stencil stencil = Stencil::Central3);

/// Downsampling used by the registration pyramid: smooth with sigma = 1, keep
/// every second pixel.
ImageGrid downsample(const ImageGrid& image);

/// Groupwise registration by alternating minimization.
RegistrationResult groupwise_register(const ImageStack& stack, const RegistrationConfig& cfg);

}  // namespace tres
