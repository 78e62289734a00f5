// Command-line driver: register, resolve, visualize, model-check, synth3d.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "tres/error.hpp"
#include "tres/io.hpp"
#include "tres/model.hpp"
#include "tres/parallel.hpp"
#include "tres/phantom.hpp"
#include "tres/registration.hpp"
#include "tres/resolution.hpp"
#include "tres/viz.hpp"

#ifndef TRES_VERSION
#define TRES_VERSION "0.0.0"
#endif

namespace {

using namespace tres;

constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitCapped = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Files behind an input argument, in a stable order.
std::vector<fs::path> input_files(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else if (p.extension() == ".hdr" || p.extension() == ".raw" ||
             (!fs::exists(p) && fs::exists(field_header_path(p)))) {
    out = {field_header_path(p), field_payload_path(p)};
  } else {
    out = {p};
  }
  return out;
}

/// Key-value manifest in the same format --config reads. Comment lines carry
/// the tool version and input hashes.
void write_manifest(const fs::path& out_dir, const CLI::App& sub,
                    const std::vector<fs::path>& inputs) {
  std::string text = "# tres " TRES_VERSION " run manifest\n";
  text += "# rerun: tres --config <this file> " + sub.get_name() + "\n";
  for (const auto& in : inputs)
    for (const auto& f : input_files(in))
      text += "# input " + f.generic_string() + " fnv1a64=" + hex64(fnv1a64(read_file_bytes(f))) + "\n";
  text += "[" + sub.get_name() + "]\n";
  text += sub.config_to_str(true, false);
  write_file_bytes(out_dir / "manifest.ini", text);
}

std::optional<SliceSpec> slice_or_default(const ImageGrid& g, const std::string& text) {
  if (!text.empty()) return parse_slice_spec(text);
  if (g.dim() == 3) return SliceSpec{0, g.shape()[0] / 2};
  return std::nullopt;
}

// ---------------------------------------------------------------- register

struct RegisterArgs {
  std::vector<std::string> input;
  std::string labels;
  int digit = -1;
  std::size_t limit = 100;
  std::string transform = "affine";
  std::string norm = "l2";
  double lambda = 1e-3;
  int iters = 50;
  bool fit_intensity_scale = false;
  std::uint64_t seed = 0;
  std::string out;
};

bool is_field_path(const std::string& s) {
  const auto ext = fs::path(s).extension();
  return ext == ".hdr" || ext == ".raw";
}

ImageStack load_register_input(const RegisterArgs& a) {
  const bool idx = a.input.size() == 1 && !fs::is_directory(a.input[0]) && !is_field_path(a.input[0]);
  if (!idx) {
    if (!a.labels.empty() || a.digit >= 0)
      throw UsageError("--labels and --digit apply only to IDX image input");
    if (a.input.size() == 1 && fs::is_directory(a.input[0])) return load_field_stack(a.input[0]);
    std::vector<ImageGrid> images;
    for (const auto& p : a.input) {
      if (!is_field_path(p)) throw UsageError("mixed inputs: expected field files, got " + p);
      images.push_back(load_field(p).grid);
    }
    return ImageStack(std::move(images));
  }
  if (a.digit < 0) return load_idx_images(a.input[0], a.limit);
  const auto labels = load_idx_labels(a.labels);
  return load_idx_images(a.input[0], a.limit, [&](std::size_t i) {
    return i < labels.size() && labels[i] == static_cast<std::uint8_t>(a.digit);
  });
}

void write_transforms(const fs::path& path, const RegistrationResult& r) {
  std::string text = "# index kind dim scale parameters (affine: A row-major, b; rigid: angles, b)\n";
  for (std::size_t i = 0; i < r.transforms.size(); ++i) {
    const auto& t = r.transforms[i];
    text += std::to_string(i) + (t.kind() == TransformKind::Affine ? " affine " : " rigid ") +
            std::to_string(t.dim()) + " " + fmt(r.intensity_scales[i]);
    for (double p : t.parameters()) text += " " + fmt(p);
    text += "\n";
  }
  write_file_bytes(path, text);
}

void write_energy(const fs::path& path, const RegistrationResult& r) {
  std::string text = "# level iteration energy frozen accepted\n";
  for (const auto& e : r.energy_trace)
    text += std::to_string(e.level) + " " + std::to_string(e.iteration) + " " + fmt(e.energy) + " " +
            std::to_string(e.frozen) + " " + (e.accepted ? "1" : "0") + "\n";
  write_file_bytes(path, text);
}

int run_register(const RegisterArgs& a, const CLI::App& sub) {
  const ImageStack stack = load_register_input(a);
  RegistrationConfig cfg;
  cfg.transform_kind = a.transform == "rigid" ? TransformKind::Rigid : TransformKind::Affine;
  cfg.norm = a.norm == "l1" ? Norm::L1 : Norm::L2;
  cfg.lambda = a.lambda;
  cfg.outer_iterations = a.iters;
  cfg.fit_intensity_scale = a.fit_intensity_scale;
  cfg.seed = a.seed;
  const auto result = groupwise_register(stack, cfg);

  const fs::path out = a.out;
  fs::create_directories(out);
  save_field(out / "template", result.template_image, "template");
  if (result.template_image.dim() <= 2) save_pgm(result.template_image, out / "template.pgm");
  fs::remove_all(out / "registered");
  save_field_stack(out / "registered", result.registered, "img", "image");
  write_transforms(out / "transforms.txt", result);
  write_energy(out / "energy.txt", result);
  std::vector<fs::path> inputs(a.input.begin(), a.input.end());
  if (!a.labels.empty()) inputs.emplace_back(a.labels);
  write_manifest(out, sub, inputs);

  std::printf("images: %zu\n", stack.size());
  std::printf("energy: %s -> %s (%zu records)\n", fmt6(result.energy_trace.front().energy).c_str(),
              fmt6(result.energy_trace.back().energy).c_str(), result.energy_trace.size());
  return 0;
}

// ---------------------------------------------------------------- resolve

struct ResolveArgs {
  std::string registered;
  double eta = 1.0;
  double p0 = 0.1;
  double p1 = 0.9;
  double step = 0.25;
  std::optional<double> sigma_cap;
  std::string slice;
  std::string out;
};

int run_resolve(const ResolveArgs& a, const CLI::App& sub) {
  const ImageStack stack = load_field_stack(a.registered);
  ResolutionConfig cfg;
  cfg.eta = a.eta;
  cfg.p0 = a.p0;
  cfg.p1 = a.p1;
  cfg.step = a.step;
  cfg.sigma_cap = a.sigma_cap;
  const auto field = resolution_measure(stack, cfg);

  const fs::path out = a.out;
  fs::create_directories(out);
  save_field(out / "sigma_star", field.sigma_star, "sigma_star");
  write_file_bytes(out / "sigma_star.ppm",
                   render_heatmap(field.sigma_star, slice_or_default(field.sigma_star, a.slice)));
  write_manifest(out, sub, {fs::path(a.registered)});

  double sum = 0.0;
  std::size_t count = 0;
  for (double s : field.sigma_star.values())
    if (s > 0.0) {
      sum += s;
      ++count;
    }
  std::printf("images: %zu\n", stack.size());
  std::printf("threshold: %s\n", fmt6(threshold_value(cfg)).c_str());
  std::printf("iterations: %zu\n", field.iterations_used);
  std::printf("max sigma*: %s\n", fmt6(field.sigma_star.max()).c_str());
  std::printf("mean sigma* (sigma* > 0): %s over %zu pixels\n", fmt6(count ? sum / count : 0.0).c_str(),
              count);
  std::printf("capped pixels: %zu (sigma cap %s)\n", field.capped_pixels, fmt6(field.sigma_cap).c_str());
  if (field.capped_pixels > 0) {
    std::fprintf(stderr, "warning: %zu pixels did not reach the threshold below the sigma cap\n",
                 field.capped_pixels);
    return kExitCapped;
  }
  return 0;
}

// ---------------------------------------------------------------- visualize

struct VisualizeArgs {
  std::string template_path;
  std::string sigma_star;
  std::string slice;
  std::optional<std::size_t> stride;
  std::optional<double> eps_grad;
  double sigma_g = 1.0;
  std::string out;
};

int run_visualize(const VisualizeArgs& a, const CLI::App& sub) {
  const ImageGrid tmpl = load_field(a.template_path).grid;
  const ImageGrid sigma = load_field(a.sigma_star).grid;
  OverlayOptions opts;
  opts.sigma_g = a.sigma_g;
  opts.eps_grad = a.eps_grad;
  opts.stride = a.stride;
  if (!a.slice.empty()) opts.slice = parse_slice_spec(a.slice);
  else if (tmpl.dim() == 3) throw UsageError("--slice axis:index is required for 3D fields");
  const auto overlay = build_overlay(tmpl, sigma, opts);

  const fs::path out = a.out;
  fs::create_directories(out);
  write_file_bytes(out / "overlay.svg", render_overlay_svg(tmpl, overlay, {0.0, std::max(sigma.max(), 0.0)}));
  write_file_bytes(out / "sigma_star.ppm", render_heatmap(sigma, opts.slice));
  write_manifest(out, sub, {fs::path(a.template_path), fs::path(a.sigma_star)});
  std::printf("bars: %zu\n", overlay.bars.size());
  return 0;
}

// ---------------------------------------------------------------- model-check

struct ModelCheckArgs {
  std::size_t n = 1000;
  double tau = 4.0;
  std::uint64_t seed = 0;
  double p0 = 0.1;
  double p1 = 0.9;
  double step = 0.25;
  std::string out;
};

int run_model_check(const ModelCheckArgs& a, const CLI::App& sub) {
  EdgeSampleSpec spec;
  spec.n = a.n;
  spec.tau = a.tau;
  spec.seed = a.seed;
  ResolutionConfig cfg;
  cfg.eta = 1.0;
  cfg.p0 = a.p0;
  cfg.p1 = a.p1;
  cfg.step = a.step;
  const auto field = resolution_measure(sample_edges(spec), cfg);
  const auto center = static_cast<std::size_t>(-spec.grid.origin);

  std::printf("sigma* profile (x sigma*):\n");
  for (std::size_t i = 0; i < spec.grid.size; ++i)
    std::printf("%g %g\n", spec.grid.coordinate(i), field.sigma_star[i]);
  std::printf("sigma*(0) = %s\n", fmt6(field.sigma_star[center]).c_str());
  if (a.tau > 0.0) std::printf("sigma*(0) / tau = %s\n", fmt6(field.sigma_star[center] / a.tau).c_str());
  else std::printf("sigma*(0) / tau = n/a (tau = 0)\n");
  std::printf("capped pixels: %zu\n", field.capped_pixels);

  std::printf("\nedges shifted by tau = 1, smoothed: max difference 2 Phi(tau / (2 sigma)) - 1\n");
  std::printf("sigma/tau  delta_max\n");
  for (double r : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0})
    std::printf("%-9g  %.6f\n", r, edge_max_diff(1.0, r));
  std::printf("matched smoothing 2 Phi(1/2) - 1 = %.6f\n", 2.0 * std_normal_cdf(0.5) - 1.0);
  std::printf("\npoint masses at distance tau = 1: sigma-rescaled max difference, exact vs linearized\n");
  std::printf("sigma/tau  exact        approx       rel_error\n");
  for (double r : {1.0, 2.0, 5.0, 10.0, 20.0}) {
    const double ex = point_mass_max_diff_exact(1.0, r);
    const double ap = point_mass_max_diff_approx(1.0, r);
    std::printf("%-9g  %.6e  %.6e  %.4f\n", r, ex, ap, std::abs(ex - ap) / ex);
  }

  if (!a.out.empty()) {
    const fs::path out = a.out;
    fs::create_directories(out);
    save_field(out / "sigma_star", field.sigma_star, "sigma_star");
    write_manifest(out, sub, {});
  }
  return field.capped_pixels > 0 ? kExitCapped : 0;
}

// ---------------------------------------------------------------- synth3d

struct Synth3dArgs {
  std::size_t n = 8;
  std::size_t size = 32;
  double matrix_scale = 0.05;
  double shift_scale = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth3d(const Synth3dArgs& a, const CLI::App& sub) {
  PhantomStackSpec spec;
  spec.n = a.n;
  spec.size = a.size;
  spec.matrix_scale = a.matrix_scale;
  spec.shift_scale = a.shift_scale;
  spec.seed = a.seed;
  const auto stack = phantom_stack(spec);
  const fs::path out = a.out;
  fs::create_directories(out);
  fs::remove_all(out / "images");
  save_field_stack(out / "images", stack, "img", "image");
  write_manifest(out, sub, {});
  std::printf("wrote %zu volumes of %zu^3 to %s\n", stack.size(), a.size, (out / "images").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template resolution: groupwise registration and the quantile-range resolution measure"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a manifest or config file");
  app.set_version_flag("--version", std::string(TRES_VERSION));
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* s_reg = app.add_subcommand("register", "Groupwise registration of an image stack");
  s_reg->add_option("--input", reg.input, "IDX image file, field files, or a directory of field files")
      ->required();
  auto* o_labels = s_reg->add_option("--labels", reg.labels, "IDX label file");
  auto* o_digit = s_reg->add_option("--digit", reg.digit, "Keep only images with this label")
      ->check(CLI::Range(0, 9));
  o_digit->needs(o_labels);
  o_labels->needs(o_digit);
  s_reg->add_option("--limit", reg.limit, "Maximum number of IDX images")->check(CLI::PositiveNumber);
  s_reg->add_option("--transform", reg.transform)->check(CLI::IsMember({"affine", "rigid"}));
  s_reg->add_option("--norm", reg.norm)->check(CLI::IsMember({"l2", "l1"}));
  s_reg->add_option("--lambda", reg.lambda, "Regularization weight")->check(CLI::NonNegativeNumber);
  s_reg->add_option("--iters", reg.iters, "Outer iterations per pyramid level")->check(CLI::PositiveNumber);
  s_reg->add_flag("--fit-intensity-scale", reg.fit_intensity_scale, "Fit one intensity factor per image");
  s_reg->add_option("--seed", reg.seed, "Recorded in the manifest; the optimizer is deterministic");
  s_reg->add_option("--out", reg.out, "Output directory")->required();

  ResolveArgs res;
  auto* s_res = app.add_subcommand("resolve", "Resolution measure of a registered stack");
  s_res->add_option("--registered", res.registered, "Directory of registered field files")->required();
  s_res->add_option("--eta", res.eta, "Effective height (0.6 for MNIST)");
  s_res->add_option("--p0", res.p0);
  s_res->add_option("--p1", res.p1);
  s_res->add_option("--step", res.step, "Bandwidth increment, pixels");
  s_res->add_option("--sigma-cap", res.sigma_cap, "Largest bandwidth (default: 2 x largest extent)");
  s_res->add_option("--slice", res.slice, "Heatmap plane axis:index for 3D (default 0:middle)");
  s_res->add_option("--out", res.out, "Output directory")->required();

  VisualizeArgs vis;
  auto* s_vis = app.add_subcommand("visualize", "Bar overlay and heatmap");
  s_vis->add_option("--template", vis.template_path)->required();
  s_vis->add_option("--sigma-star", vis.sigma_star)->required();
  s_vis->add_option("--slice", vis.slice, "Plane axis:index, required for 3D");
  s_vis->add_option("--stride", vis.stride, "Pixel stride (default 2, 3 for 3D)")->check(CLI::PositiveNumber);
  s_vis->add_option("--eps-grad", vis.eps_grad, "Gradient threshold (default 1e-3 x template range)");
  s_vis->add_option("--sigma-g", vis.sigma_g, "Gradient filter bandwidth, pixels");
  s_vis->add_option("--out", vis.out, "Output directory")->required();

  ModelCheckArgs mc;
  auto* s_mc = app.add_subcommand("model-check", "Random-edge model: sigma* against tau");
  s_mc->add_option("--n", mc.n, "Number of edges")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  s_mc->add_option("--tau", mc.tau, "Edge position standard deviation, pixels")->check(CLI::NonNegativeNumber);
  s_mc->add_option("--seed", mc.seed);
  s_mc->add_option("--p0", mc.p0);
  s_mc->add_option("--p1", mc.p1);
  s_mc->add_option("--step", mc.step);
  s_mc->add_option("--out", mc.out, "Optional output directory for the sigma* field");

  Synth3dArgs sy;
  auto* s_sy = app.add_subcommand("synth3d", "Randomly perturbed 3D phantom stack");
  s_sy->add_option("--n", sy.n)->check(CLI::PositiveNumber);
  s_sy->add_option("--size", sy.size, "Grid extent per axis")->check(CLI::Range(std::size_t{4}, std::size_t{512}));
  s_sy->add_option("--matrix-scale", sy.matrix_scale, "Std. dev. of A - I entries");
  s_sy->add_option("--shift-scale", sy.shift_scale, "Std. dev. of translations, pixels");
  s_sy->add_option("--seed", sy.seed);
  s_sy->add_option("--out", sy.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    set_thread_count(static_cast<unsigned>(threads));
    if (s_reg->parsed()) return run_register(reg, *s_reg);
    if (s_res->parsed()) return run_resolve(res, *s_res);
    if (s_vis->parsed()) return run_visualize(vis, *s_vis);
    if (s_mc->parsed()) return run_model_check(mc, *s_mc);
    if (s_sy->parsed()) return run_synth3d(sy, *s_sy);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitUsage;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
