#include "bsplace/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "bsplace/error.hpp"

namespace bsplace {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw Error("malformed PGM header: expected a number");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 24)) throw Error("malformed PGM header: value too large");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw Error("malformed PGM header: magic is not P5");
  HeaderReader r(bytes);
  r.advance(2);
  const long w = r.number();
  const long h = r.number();
  const long maxval = r.number();
  if (w <= 0 || h <= 0) throw Error("malformed PGM header: non-positive size");
  if (maxval != 255) throw Error("malformed PGM header: maxval must be 255");
  // Exactly one whitespace byte separates the header from the raster.
  if (r.pos() >= bytes.size() || !std::isspace(bytes[r.pos()]))
    throw Error("malformed PGM header: missing separator");
  r.advance(1);
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - r.pos() < n) throw Error("malformed PGM: truncated raster");
  GrayImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(r.pos() + n));
  return img;
}

static std::vector<std::uint8_t> encode_netpbm(const char* magic, int w, int h,
                                               std::span<const std::uint8_t> px) {
  const std::string header =
      std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  return encode_netpbm("P5", img.width, img.height, img.pixels);
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  return encode_netpbm("P6", img.width, img.height, img.pixels);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace bsplace
