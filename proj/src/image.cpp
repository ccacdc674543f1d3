#include "armatch/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "armatch/error.hpp"

namespace armatch {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid parameter";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::DegenerateRegion: return "degenerate region";
    case ErrorKind::DegeneratePose: return "degenerate pose";
    case ErrorKind::DescriptorUnavailable: return "descriptor unavailable";
    case ErrorKind::ClassificationFailed: return "classification failed";
    case ErrorKind::EstimationFailed: return "estimation failed";
    case ErrorKind::Configuration: return "configuration error";
  }
  return "error";
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  require(width >= 1 && height >= 1, "image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(width >= 1 && height >= 1, "image dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(width) * height,
          "pixel buffer size does not match width * height");
}

FloatImage to_float(const GrayImage& img) {
  FloatImage out(img.width(), img.height());
  std::copy(img.pixels().begin(), img.pixels().end(), out.data.begin());
  return out;
}

GrayImage to_gray(const FloatImage& img) {
  GrayImage out(img.width, img.height);
  auto px = out.pixels();
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::floor(static_cast<double>(img.data[i]) + 0.5);
    px[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

GrayImage invert(const GrayImage& img) {
  GrayImage out = img;
  for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

namespace {

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Reads the next whitespace-delimited token, skipping '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    token.push_back(bytes[pos++]);
  }
  return token;
}

int parse_header_int(const std::string& token, const std::string& what,
                     const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, path.string() + ": bad " + what + " '" + token + "'");
  }
}

}  // namespace

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  NetpbmHeader h;
  h.magic = next_token(bytes, pos);
  if (h.magic != "P5" && h.magic != "P6") {
    fail(ErrorKind::Parse, path.string() + ": unsupported image format '" + h.magic +
                               "' (binary PGM P5 or PPM P6 expected)");
  }
  h.width = parse_header_int(next_token(bytes, pos), "width", path);
  h.height = parse_header_int(next_token(bytes, pos), "height", path);
  h.maxval = parse_header_int(next_token(bytes, pos), "maxval", path);
  if (h.width < 1 || h.height < 1) fail(ErrorKind::Parse, path.string() + ": empty image");
  if (h.maxval != 255) {
    fail(ErrorKind::Parse, path.string() + ": maxval " + std::to_string(h.maxval) +
                               " not supported (255 only)");
  }
  ++pos;  // single whitespace byte after maxval

  const std::size_t channels = h.magic == "P6" ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() < pos + n * channels) fail(ErrorKind::Parse, path.string() + ": truncated pixel data");

  std::vector<std::uint8_t> data(n);
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  if (channels == 1) {
    std::copy(src, src + n, data.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
      data[i] = static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
    }
  }
  return GrayImage(h.width, h.height, std::move(data));
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace armatch
