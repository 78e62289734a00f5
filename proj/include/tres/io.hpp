#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tres/grid.hpp"

namespace tres {

namespace fs = std::filesystem;

/// Reads an IDX3 image file (magic 0x00000803, big-endian counts, unsigned
/// bytes). Intensities are divided by 255. `select`, when given, filters by
/// file index; at most `count_limit` selected images are returned in file
/// order.
ImageStack load_idx_images(const fs::path& path, std::size_t count_limit,
                           const std::function<bool(std::size_t)>& select = {});

/// Reads an IDX1 label file (magic 0x00000801).
std::vector<std::uint8_t> load_idx_labels(const fs::path& path);

/// Field file: a key-value text header `<stem>.hdr` next to a raw payload
/// `<stem>.raw` of little-endian float32 values in row-major order.
struct FieldFile {
  ImageGrid grid;
  std::string label;  ///< template | sigma_star | image | ...
};

/// `path` may name the stem or either of the two files.
void save_field(const fs::path& path, const ImageGrid& grid, const std::string& label);
FieldFile load_field(const fs::path& path);
fs::path field_header_path(const fs::path& path);
fs::path field_payload_path(const fs::path& path);

/// Saves stack members as `<dir>/<prefix>_0000.hdr`, ...
void save_field_stack(const fs::path& dir, const ImageStack& stack, const std::string& prefix,
                      const std::string& label);
/// Loads every `*.hdr` in `dir`, sorted by file name.
ImageStack load_field_stack(const fs::path& dir);

/// Binary 8-bit PGM (P5) with min-max scaling; 1D grids become one row.
void save_pgm(const ImageGrid& image, const fs::path& path);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};
PgmImage load_pgm(const fs::path& path);

std::string read_file_bytes(const fs::path& path);
void write_file_bytes(const fs::path& path, const std::string& bytes);

}  // namespace tres
