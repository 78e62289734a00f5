#include "tres/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "tres/error.hpp"

namespace tres {
namespace {

constexpr std::uint32_t kIdx3Magic = 0x00000803;
constexpr std::uint32_t kIdx1Magic = 0x00000801;

std::uint32_t read_u32_be(const std::string& bytes, std::size_t offset) {
  return (std::uint32_t{static_cast<unsigned char>(bytes[offset])} << 24) |
         (std::uint32_t{static_cast<unsigned char>(bytes[offset + 1])} << 16) |
         (std::uint32_t{static_cast<unsigned char>(bytes[offset + 2])} << 8) |
         std::uint32_t{static_cast<unsigned char>(bytes[offset + 3])};
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

fs::path stem_of(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".hdr" || ext == ".raw") return fs::path(path).replace_extension();
  return path;
}

}  // namespace

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ImageStack load_idx_images(const fs::path& path, std::size_t count_limit,
                           const std::function<bool(std::size_t)>& select) {
  if (count_limit == 0) throw InvalidInput("count limit 0 selects an empty stack");
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 16) throw FormatError(path.string() + ": truncated IDX3 header");
  const auto magic = read_u32_be(bytes, 0);
  if (magic != kIdx3Magic)
    throw FormatError(path.string() + ": expected IDX3 magic 0x00000803, found " + hex32(magic));
  const std::size_t n = read_u32_be(bytes, 4);
  const std::size_t rows = read_u32_be(bytes, 8);
  const std::size_t cols = read_u32_be(bytes, 12);
  const std::size_t pixels = rows * cols;
  if (pixels == 0 && n > 0) throw FormatError(path.string() + ": zero-sized images");
  if (bytes.size() - 16 < n * pixels) throw FormatError(path.string() + ": truncated IDX3 payload");

  std::vector<ImageGrid> images;
  for (std::size_t i = 0; i < n && images.size() < count_limit; ++i) {
    if (select && !select(i)) continue;
    std::vector<double> v(pixels);
    const auto* src = reinterpret_cast<const unsigned char*>(bytes.data()) + 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) v[p] = static_cast<double>(src[p]) / 255.0;
    images.emplace_back(Shape{rows, cols}, std::move(v));
  }
  if (images.empty()) throw InvalidInput(path.string() + ": no images selected");
  return ImageStack(std::move(images));
}

std::vector<std::uint8_t> load_idx_labels(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 8) throw FormatError(path.string() + ": truncated IDX1 header");
  const auto magic = read_u32_be(bytes, 0);
  if (magic != kIdx1Magic)
    throw FormatError(path.string() + ": expected IDX1 magic 0x00000801, found " + hex32(magic));
  const std::size_t n = read_u32_be(bytes, 4);
  if (bytes.size() - 8 < n) throw FormatError(path.string() + ": truncated IDX1 payload");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

fs::path field_header_path(const fs::path& path) {
  return fs::path(stem_of(path)).concat(".hdr");
}

fs::path field_payload_path(const fs::path& path) {
  return fs::path(stem_of(path)).concat(".raw");
}

void save_field(const fs::path& path, const ImageGrid& grid, const std::string& label) {
  if (grid.empty()) throw InvalidInput("cannot save an empty field");
  if (label.empty() || label.find_first_of(" \t\n") != std::string::npos)
    throw InvalidInput("field label must be a single non-empty word");
  std::string header = "tres-field 1\n";
  header += "dim " + std::to_string(grid.dim()) + "\n";
  header += "shape";
  for (auto e : grid.shape()) header += " " + std::to_string(e);
  header += "\nencoding float32\nendianness little\nlabel " + label + "\n";
  header += "payload " + field_payload_path(path).filename().string() + "\n";

  std::string payload(grid.size() * 4, '\0');
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(grid[i]));
    for (int b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  write_file_bytes(field_header_path(path), header);
  write_file_bytes(field_payload_path(path), payload);
}

FieldFile load_field(const fs::path& path) {
  const fs::path hdr = field_header_path(path);
  std::istringstream in(read_file_bytes(hdr));
  std::string line;
  if (!std::getline(in, line) || line != "tres-field 1")
    throw FormatError(hdr.string() + ": not a field header");
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError(hdr.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  for (const char* key : {"dim", "shape", "encoding", "endianness", "label"})
    if (!kv.count(key)) throw FormatError(hdr.string() + ": missing key '" + key + "'");
  if (kv["encoding"] != "float32") throw FormatError(hdr.string() + ": unsupported encoding");
  if (kv["endianness"] != "little") throw FormatError(hdr.string() + ": unsupported endianness");

  Shape shape;
  {
    std::istringstream ss(kv["shape"]);
    long long e = 0;
    while (ss >> e) {
      if (e <= 0) throw FormatError(hdr.string() + ": shape entries must be positive");
      shape.push_back(static_cast<std::size_t>(e));
    }
    if (!ss.eof()) throw FormatError(hdr.string() + ": malformed shape");
  }
  if (shape.empty() || shape.size() > 3 || std::to_string(shape.size()) != kv["dim"])
    throw FormatError(hdr.string() + ": dim and shape disagree");

  const fs::path raw = kv.count("payload") ? hdr.parent_path() / kv["payload"] : field_payload_path(path);
  const std::string payload = read_file_bytes(raw);
  const std::size_t count = element_count(shape);
  if (payload.size() != count * 4)
    throw FormatError(raw.string() + ": payload has " + std::to_string(payload.size()) +
                      " bytes, header implies " + std::to_string(count * 4));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= std::uint32_t{static_cast<unsigned char>(payload[4 * i + b])} << (8 * b);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
    if (!std::isfinite(values[i])) throw FormatError(raw.string() + ": non-finite value");
  }
  return {ImageGrid(std::move(shape), std::move(values)), kv["label"]};
}

void save_field_stack(const fs::path& dir, const ImageStack& stack, const std::string& prefix,
                      const std::string& label) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu", prefix.c_str(), i);
    save_field(dir / name, stack[i], label);
  }
}

ImageStack load_field_stack(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
  std::vector<fs::path> headers;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".hdr") headers.push_back(entry.path());
  std::sort(headers.begin(), headers.end());
  if (headers.empty()) throw FormatError(dir.string() + ": no field files found");
  std::vector<ImageGrid> images;
  for (const auto& h : headers) images.push_back(load_field(h).grid);
  try {
    return ImageStack(std::move(images));
  } catch (const InvalidInput& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
}

void save_pgm(const ImageGrid& image, const fs::path& path) {
  if (image.empty()) throw InvalidInput("cannot save an empty image");
  if (image.dim() > 2) throw InvalidInput("PGM output needs a 1D or 2D image");
  const std::size_t height = image.dim() == 2 ? image.shape()[0] : 1;
  const std::size_t width = image.dim() == 2 ? image.shape()[1] : image.shape()[0];
  const double lo = image.min();
  const double span = image.max() - lo;
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (double v : image.values()) {
    const double t = span > 0.0 ? (v - lo) / span : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
  }
  write_file_bytes(path, out);
}

PgmImage load_pgm(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::istringstream in(bytes);
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  if (!(in >> magic >> width >> height >> maxval) || magic != "P5" || maxval != 255)
    throw FormatError(path.string() + ": not an 8-bit binary PGM");
  in.get();  // single whitespace before the raster
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() - offset != width * height)
    throw FormatError(path.string() + ": PGM raster size mismatch");
  PgmImage img{width, height, {}};
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return img;
}

}  // namespace tres
