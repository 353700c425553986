#include "lsfm/io/pgm.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lsfm::io {

namespace {

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view text) : text_(text) {}

  long next(const char* what) {
    skip();
    const char* b = text_.data() + pos_;
    const char* e = text_.data() + text_.size();
    long v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p == b)
      throw std::invalid_argument(std::string("PGM: expected integer for ") + what);
    pos_ += static_cast<std::size_t>(p - b);
    return v;
  }

  std::string_view word() {
    skip();
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      if (text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

PgmImage parse_pgm(std::string_view text) {
  Tokenizer tok(text);
  if (tok.word() != "P2") throw std::invalid_argument("PGM: only plain P2 images are supported");
  const long w = tok.next("width");
  const long h = tok.next("height");
  const long maxval = tok.next("maxval");
  if (w <= 0 || h <= 0) throw std::invalid_argument("PGM: image dimensions must be positive");
  if (maxval <= 0 || maxval > 65535) throw std::invalid_argument("PGM: maxval out of range");
  PgmImage img{static_cast<std::size_t>(w), static_cast<std::size_t>(h), static_cast<int>(maxval),
               {}};
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) {
    const long v = tok.next("pixel");
    if (v < 0 || v > maxval) throw std::invalid_argument("PGM: pixel value exceeds maxval");
    p = static_cast<int>(v);
  }
  return img;
}

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open PGM file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pgm(ss.str());
}

std::string format_pgm(const PgmImage& image) {
  std::ostringstream out;
  out << "P2\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      if (c) out << ' ';
      out << image.at(c, r);
    }
    out << '\n';
  }
  return out.str();
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_pgm(image);
}

}  // namespace lsfm::io
