#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lsfm::io {

/// Grayscale image; row 0 is the top row.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 255;
  std::vector<int> pixels;

  int at(std::size_t col, std::size_t row) const { return pixels[row * width + col]; }
};

/// Plain (P2) PGM. Throws std::invalid_argument on malformed input.
PgmImage parse_pgm(std::string_view text);
PgmImage read_pgm(const std::filesystem::path& path);
std::string format_pgm(const PgmImage& image);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

}  // namespace lsfm::io
