#include "tres/registration.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>

#include "tres/error.hpp"
#include "tres/parallel.hpp"
#include "tres/smoothing.hpp"

namespace tres {
namespace {

constexpr double kMinScale = 1e-6;

// x = M y + offset, mapping output pixel coordinates y to source pixel
// coordinates x for the inverse of a centered transform.
struct PixelMap {
  std::size_t dim = 0;
  double m[3][3] = {};
  double offset[3] = {};
};

PixelMap inverse_pixel_map(const Transform& t, const Shape& shape) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  if (t.dim() != shape.size()) throw InvalidInput("transform and image dimensions differ");
  if (!(std::abs(t.determinant()) > 1e-8)) throw InvalidTransform("transform is not invertible");
  const Matrix inv = t.matrix().inverse();
  Vector center(d);
  for (Eigen::Index a = 0; a < d; ++a) center(a) = 0.5 * static_cast<double>(shape[a] - 1);
  const Vector off = center - inv * (center + t.translation());
  PixelMap map;
  map.dim = t.dim();
  for (Eigen::Index r = 0; r < d; ++r) {
    map.offset[r] = off(r);
    for (Eigen::Index c = 0; c < d; ++c) map.m[r][c] = inv(r, c);
  }
  return map;
}

// Calls fn(linear_index, source_value) for every output pixel.
template <typename Fn>
void for_each_warped(const ImageGrid& image, const PixelMap& map, Fn&& fn) {
  const auto& shape = image.shape();
  const std::size_t d = shape.size();
  std::size_t coords[3] = {0, 0, 0};
  double point[3];
  const std::size_t n = image.size();
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (std::size_t r = 0; r < d; ++r) {
      double v = map.offset[r];
      for (std::size_t c = 0; c < d; ++c) v += map.m[r][c] * static_cast<double>(coords[c]);
      point[r] = v;
    }
    fn(idx, sample_linear(image, std::span<const double>(point, d)));
    for (std::size_t a = d; a-- > 0;) {
      if (++coords[a] < shape[a]) break;
      coords[a] = 0;
    }
  }
}

double half_extent(const Shape& shape) {
  double r = 1.0;
  for (auto e : shape) r = std::max(r, 0.5 * static_cast<double>(e - 1));
  return r;
}

// Matrix entries and angles are scaled by the half extent so that a unit change
// of any scaled parameter moves boundary pixels by roughly one pixel.
std::vector<double> to_scaled(const Transform& t, double radius) {
  auto p = t.parameters();
  const std::size_t linear = p.size() - t.dim();
  for (std::size_t k = 0; k < linear; ++k) p[k] *= radius;
  return p;
}

Transform from_scaled(TransformKind kind, std::size_t dim, std::vector<double> u, double radius) {
  const std::size_t linear = u.size() - dim;
  for (std::size_t k = 0; k < linear; ++k) u[k] /= radius;
  return Transform::from_parameters(kind, dim, u);
}

double weighted_median(std::vector<std::pair<double, double>>& items) {
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  for (const auto& it : items) total += it.second;
  const double half = 0.5 * total;
  double cum = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    cum += items[k].second;
    if (cum == half && k + 1 < items.size()) return 0.5 * (items[k].first + items[k + 1].first);
    if (cum > half) return items[k].first;
  }
  return items.back().first;
}

bool all_unit(const std::vector<double>& scales) {
  return std::all_of(scales.begin(), scales.end(), [](double s) { return s == 1.0; });
}

void validate(const RegistrationConfig& cfg) {
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda))
    throw InvalidInput("lambda must be finite and non-negative");
  if (cfg.outer_iterations < 1 || cfg.inner_steps < 1)
    throw InvalidInput("iteration counts must be at least 1");
  if (cfg.pyramid_levels < 1 || cfg.pyramid_levels > 2)
    throw InvalidInput("pyramid_levels must be 1 or 2");
  if (!(cfg.step.initial > 0.0) || !(cfg.step.shrink > 0.0 && cfg.step.shrink < 1.0) ||
      !(cfg.step.grow >= 1.0) || cfg.step.max_backtracks < 1)
    throw InvalidInput("invalid step size schedule");
  if (!(cfg.fd_step > 0.0)) throw InvalidInput("finite-difference step must be positive");
}

struct DescentOutcome {
  Transform transform;
  double step = 0.0;
  bool frozen = false;
};

DescentOutcome descend(const ImageGrid& image, Transform t, const ImageGrid& target,
                       double scale, const RegistrationConfig& cfg, double step) {
  const std::size_t dim = image.dim();
  const double radius = half_extent(image.shape());
  const auto kind = cfg.transform_kind;
  auto energy = [&](const Transform& x) {
    return image_energy(image, x, target, scale, cfg.norm, cfg.lambda);
  };
  double f0 = energy(t);
  std::vector<double> u = to_scaled(t, radius);
  bool frozen = false;
  for (int s = 0; s < cfg.inner_steps; ++s) {
    const auto g = energy_gradient(image, t, target, scale, cfg.norm, cfg.lambda, cfg.fd_step);
    double gnorm = 0.0;
    for (double v : g) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    if (!(gnorm > 0.0)) break;
    bool accepted = false;
    for (int bt = 0; bt < cfg.step.max_backtracks; ++bt) {
      std::vector<double> trial(u.size());
      for (std::size_t k = 0; k < u.size(); ++k) trial[k] = u[k] - step * g[k] / gnorm;
      std::optional<Transform> candidate;
      try {
        candidate = from_scaled(kind, dim, trial, radius);
      } catch (const InvalidTransform&) {
        step *= cfg.step.shrink;
        continue;
      }
      const double f1 = energy(*candidate);
      if (f1 <= f0 - 1e-4 * step * gnorm) {
        u = std::move(trial);
        t = *candidate;
        f0 = f1;
        step = std::min(step * cfg.step.grow, cfg.step.max_step);
        accepted = true;
        break;
      }
      step *= cfg.step.shrink;
    }
    if (!accepted) {
      frozen = true;
      step = cfg.step.initial;
      break;
    }
  }
  return {std::move(t), step, frozen};
}

std::vector<ImageGrid> warp_all(const ImageStack& images, const std::vector<Transform>& ts) {
  std::vector<ImageGrid> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = warp(images[i], ts[i]); });
  return out;
}

// Common map G(u) = s u - s mean(b) applied on the left of every transform:
// removes the mean translation and, for affine transforms, rescales so the
// mean log-determinant is zero.
std::vector<Transform> gauge_fixed(const std::vector<Transform>& ts, TransformKind kind) {
  const std::size_t dim = ts.front().dim();
  const auto d = static_cast<Eigen::Index>(dim);
  Vector mean_b = Vector::Zero(d);
  double mean_logdet = 0.0;
  for (const auto& t : ts) {
    mean_b += t.translation();
    mean_logdet += std::log(std::abs(t.determinant()));
  }
  mean_b /= static_cast<double>(ts.size());
  mean_logdet /= static_cast<double>(ts.size());
  std::vector<Transform> out;
  out.reserve(ts.size());
  if (kind == TransformKind::Rigid) {
    for (const auto& t : ts) out.push_back(Transform::rigid(t.angles(), t.translation() - mean_b));
    return out;
  }
  const double s = std::exp(-mean_logdet / static_cast<double>(dim));
  for (const auto& t : ts)
    out.push_back(Transform::affine(s * t.matrix(), s * (t.translation() - mean_b)));
  return out;
}

// Transform on a factor-2 coarser grid -> equivalent transform on the fine grid.
Transform upsample_transform(const Transform& coarse, const Shape& coarse_shape,
                             const Shape& fine_shape) {
  const auto d = static_cast<Eigen::Index>(coarse.dim());
  Vector delta(d);
  for (Eigen::Index a = 0; a < d; ++a)
    delta(a) = static_cast<double>(coarse_shape[a] - 1) - 0.5 * static_cast<double>(fine_shape[a] - 1);
  const Vector b = 2.0 * coarse.translation() + (Matrix::Identity(d, d) - coarse.matrix()) * delta;
  if (coarse.kind() == TransformKind::Rigid) return Transform::rigid(coarse.angles(), b);
  return Transform::affine(coarse.matrix(), b);
}

struct LevelState {
  std::vector<Transform> transforms;
  std::vector<double> scales;
  std::vector<double> steps;
  ImageGrid template_image;
  std::vector<ImageGrid> registered;
};

void run_level(const ImageStack& images, const RegistrationConfig& cfg, int level,
               bool initial_template_is_mean, LevelState& st,
               std::vector<EnergyRecord>& trace) {
  const std::size_t n = images.size();
  st.registered = warp_all(images, st.transforms);
  st.template_image = initial_template_is_mean
                          ? pixelwise_mean(ImageStack(st.registered))
                          : optimal_template(ImageStack(st.registered), st.scales, cfg.norm);
  double e_prev =
      groupwise_energy(images, st.transforms, st.template_image, st.scales, cfg.norm, cfg.lambda);
  trace.push_back({level, 0, e_prev, 0, true});

  for (int it = 1; it <= cfg.outer_iterations; ++it) {
    std::vector<double> scales = st.scales;
    if (cfg.fit_intensity_scale) {
      for (std::size_t i = 0; i < n; ++i)
        scales[i] = optimal_intensity_scale(st.registered[i], st.template_image, cfg.norm);
    }

    std::vector<DescentOutcome> outcomes(n);
    parallel_for(n, [&](std::size_t i) {
      outcomes[i] = descend(images[i], st.transforms[i], st.template_image, scales[i], cfg,
                            st.steps[i]);
    });
    std::vector<Transform> transforms;
    std::vector<double> steps(n);
    std::size_t frozen = 0;
    for (std::size_t i = 0; i < n; ++i) {
      transforms.push_back(outcomes[i].transform);
      steps[i] = outcomes[i].step;
      frozen += outcomes[i].frozen ? 1 : 0;
    }
    try {
      transforms = gauge_fixed(transforms, cfg.transform_kind);
    } catch (const InvalidTransform&) {
    }

    auto registered = warp_all(images, transforms);
    ImageGrid tmpl = optimal_template(ImageStack(registered), scales, cfg.norm);
    const double energy =
        groupwise_energy(images, transforms, tmpl, scales, cfg.norm, cfg.lambda);

    // The projected step is kept only if it does not raise the energy;
    // otherwise every step size shrinks and the previous state stays.
    const bool accepted = energy <= e_prev;
    if (accepted) {
      st.transforms = std::move(transforms);
      st.scales = std::move(scales);
      st.steps = std::move(steps);
      st.registered = std::move(registered);
      st.template_image = std::move(tmpl);
    } else {
      for (auto& step : st.steps) step *= cfg.step.shrink;
    }
    const double e_now = accepted ? energy : e_prev;
    trace.push_back({level, it, e_now, frozen, accepted});
    const bool stalled = frozen == n ||
                         *std::max_element(st.steps.begin(), st.steps.end()) < 1e-6;
    const bool converged =
        accepted && std::abs(e_prev - e_now) <= cfg.relative_tolerance * std::abs(e_prev);
    e_prev = e_now;
    if (converged || stalled) break;
  }
}

}  // namespace

ImageGrid warp(const ImageGrid& image, const Transform& t) {
  const auto map = inverse_pixel_map(t, image.shape());
  ImageGrid out(image.shape());
  for_each_warped(image, map, [&](std::size_t idx, double v) { out[idx] = v; });
  return out;
}

double similarity(const ImageGrid& a, const ImageGrid& b, Norm norm) {
  if (a.shape() != b.shape()) throw InvalidInput("similarity needs images of equal shape");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += norm == Norm::L2 ? diff * diff : std::abs(diff);
  }
  return acc;
}

double warped_similarity(const ImageGrid& image, const Transform& t, const ImageGrid& target,
                         double scale, Norm norm) {
  if (image.shape() != target.shape()) throw InvalidInput("similarity needs images of equal shape");
  const auto map = inverse_pixel_map(t, image.shape());
  double acc = 0.0;
  for_each_warped(image, map, [&](std::size_t idx, double v) {
    const double diff = v - scale * target[idx];
    acc += norm == Norm::L2 ? diff * diff : std::abs(diff);
  });
  return acc;
}

double image_energy(const ImageGrid& image, const Transform& t, const ImageGrid& target,
                    double scale, Norm norm, double lambda) {
  double e = warped_similarity(image, t, target, scale, norm);
  if (lambda > 0.0) e += lambda * regularizer(t.inverse());
  return e;
}

double groupwise_energy(const ImageStack& images, const std::vector<Transform>& transforms,
                        const ImageGrid& target, const std::vector<double>& scales, Norm norm,
                        double lambda) {
  if (transforms.size() != images.size() || scales.size() != images.size())
    throw InvalidInput("one transform and one scale per image required");
  std::vector<double> parts(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    parts[i] = image_energy(images[i], transforms[i], target, scales[i], norm, lambda);
  });
  // Fixed left-to-right order keeps the sum independent of the thread count.
  return std::accumulate(parts.begin(), parts.end(), 0.0);
}

ImageGrid optimal_template(const ImageStack& registered, const std::vector<double>& scales,
                           Norm norm) {
  if (scales.size() != registered.size()) throw InvalidInput("one scale per image required");
  if (all_unit(scales))
    return norm == Norm::L2 ? pixelwise_mean(registered) : pixelwise_median(registered);
  ImageGrid out(registered.shape());
  const std::size_t n = registered.size();
  if (norm == Norm::L2) {
    double denom = 0.0;
    for (double c : scales) denom += c * c;
    for (std::size_t p = 0; p < out.size(); ++p) {
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += scales[i] * registered[i][p];
      out[p] = num / denom;
    }
    return out;
  }
  // sum_i |R_i - c_i T| = sum_i c_i |R_i / c_i - T|
  std::vector<std::pair<double, double>> items(n);
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) items[i] = {registered[i][p] / scales[i], scales[i]};
    out[p] = weighted_median(items);
  }
  return out;
}

double optimal_intensity_scale(const ImageGrid& registered, const ImageGrid& target, Norm norm) {
  if (registered.shape() != target.shape()) throw InvalidInput("scale fit needs equal shapes");
  if (norm == Norm::L2) {
    double rt = 0.0, tt = 0.0;
    for (std::size_t p = 0; p < target.size(); ++p) {
      rt += registered[p] * target[p];
      tt += target[p] * target[p];
    }
    return tt > 0.0 ? std::max(kMinScale, rt / tt) : 1.0;
  }
  // sum_p |R_p - c T_p| = sum_{T_p != 0} |T_p| |R_p / T_p - c| + const
  std::vector<std::pair<double, double>> items;
  for (std::size_t p = 0; p < target.size(); ++p)
    if (target[p] != 0.0) items.emplace_back(registered[p] / target[p], std::abs(target[p]));
  if (items.empty()) return 1.0;
  return std::max(kMinScale, weighted_median(items));
}

std::vector<double> energy_gradient(const ImageGrid& image, const Transform& t,
                                    const ImageGrid& target, double scale, Norm norm,
                                    double lambda, double h, Stencil stencil) {
  const double radius = half_extent(image.shape());
  const auto u = to_scaled(t, radius);
  auto f = [&](std::size_t k, double delta) -> std::optional<double> {
    auto v = u;
    v[k] += delta;
    try {
      return image_energy(image, from_scaled(t.kind(), t.dim(), v, radius), target, scale, norm,
                          lambda);
    } catch (const InvalidTransform&) {
      return std::nullopt;
    }
  };
  std::vector<double> g(u.size(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const auto fp = f(k, h);
    const auto fm = f(k, -h);
    if (!fp || !fm) continue;
    if (stencil == Stencil::Central3) {
      g[k] = (*fp - *fm) / (2.0 * h);
    } else {
      const auto fp2 = f(k, 2.0 * h);
      const auto fm2 = f(k, -2.0 * h);
      if (!fp2 || !fm2) continue;
      g[k] = (-*fp2 + 8.0 * *fp - 8.0 * *fm + *fm2) / (12.0 * h);
    }
  }
  return g;
}

ImageGrid downsample(const ImageGrid& image) {
  const ImageGrid smooth = gaussian_smooth(image, 1.0);
  Shape coarse(image.dim());
  for (std::size_t a = 0; a < image.dim(); ++a) coarse[a] = (image.shape()[a] + 1) / 2;
  ImageGrid out(coarse);
  const auto strides = image.strides();
  std::size_t coords[3] = {0, 0, 0};
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    std::size_t src = 0;
    for (std::size_t a = 0; a < image.dim(); ++a) src += 2 * coords[a] * strides[a];
    out[idx] = smooth[src];
    for (std::size_t a = image.dim(); a-- > 0;) {
      if (++coords[a] < coarse[a]) break;
      coords[a] = 0;
    }
  }
  return out;
}

RegistrationResult groupwise_register(const ImageStack& stack, const RegistrationConfig& cfg) {
  if (stack.size() < 2) throw InvalidInput("groupwise registration needs at least 2 images");
  validate(cfg);
  const std::size_t n = stack.size();
  const std::size_t dim = stack.dim();

  std::vector<ImageStack> pyramid{stack};
  const bool coarse_ok = std::all_of(stack.shape().begin(), stack.shape().end(),
                                     [](std::size_t e) { return e >= 16; });
  if (cfg.pyramid_levels >= 2 && coarse_ok) {
    std::vector<ImageGrid> coarse(n);
    parallel_for(n, [&](std::size_t i) { coarse[i] = downsample(stack[i]); });
    pyramid.emplace_back(std::move(coarse));
  }

  LevelState st;
  st.transforms.assign(n, Transform::identity(cfg.transform_kind, dim));
  st.scales.assign(n, 1.0);
  st.steps.assign(n, cfg.step.initial);

  RegistrationResult result;
  for (std::size_t level = pyramid.size(); level-- > 0;) {
    const bool coarsest = level + 1 == pyramid.size();
    if (!coarsest) {
      for (auto& t : st.transforms)
        t = upsample_transform(t, pyramid[level + 1].shape(), pyramid[level].shape());
      for (auto& s : st.steps) s = cfg.step.initial;
    }
    run_level(pyramid[level], cfg, static_cast<int>(level), coarsest, st, result.energy_trace);
  }

  result.template_image = std::move(st.template_image);
  result.transforms = std::move(st.transforms);
  result.registered = ImageStack(std::move(st.registered));
  result.intensity_scales = std::move(st.scales);
  return result;
}

}  // namespace tres
