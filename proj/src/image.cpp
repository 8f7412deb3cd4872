#include "boxmask/image.hpp"

#include <json.hpp>
#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace boxmask {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

ImageGrid::ImageGrid(int width_, int height_, int channels, double fill)
    : width(width_), height(height_) {
  require(width > 0 && height > 0, "ImageGrid: dimensions must be positive");
  require(channels == 1 || channels == 3, "ImageGrid: channels must be 1 or 3");
  planes.assign(channels, Plane::Constant(height, width, fill));
}

void validate_box(const BoxAnnotation& box, int width, int height) {
  if (!(0 <= box.x_min && box.x_min < box.x_max && box.x_max <= width &&
        0 <= box.y_min && box.y_min < box.y_max && box.y_max <= height)) {
    std::ostringstream oss;
    oss << "invalid box [" << box.x_min << "," << box.x_max << ")x[" << box.y_min
        << "," << box.y_max << ") for " << width << "x" << height << " image";
    throw std::invalid_argument(oss.str());
  }
}

GroundTruthMask::GroundTruthMask(int width_, int height_)
    : width(width_), height(height_), data(IntPlane::Zero(height_, width_)) {
  require(width > 0 && height > 0, "GroundTruthMask: dimensions must be positive");
}

BoxAnnotation tight_box(const GroundTruthMask& mask) {
  int x_lo = mask.width, x_hi = -1, y_lo = mask.height, y_hi = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.data(y, x) != 0) {
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
  }
  require(x_hi >= 0, "tight_box: mask has no foreground pixels");
  return BoxAnnotation{x_lo, y_lo, x_hi + 1, y_hi + 1};
}

namespace {

constexpr double kInv255 = 1.0 / 255.0;

int quantize(double v) {
  const int q = static_cast<int>(std::lround(v * 255.0));
  return q < 0 ? 0 : (q > 255 ? 255 : q);
}

// --- PNM (binary PPM P6 / PGM P5) ---

// Reads the next header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

ImageGrid load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open image file: " + path);
  const std::string magic = pnm_token(in);
  require(magic == "P5" || magic == "P6", "unsupported PNM magic in " + path);
  const int channels = magic == "P6" ? 3 : 1;
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed PNM header in " + path);
  }
  require(w > 0 && h > 0, "zero-dimension image: " + path);
  require(maxval == 255, "only 8-bit PNM (maxval 255) is supported: " + path);

  std::vector<unsigned char> row(static_cast<size_t>(w) * channels);
  ImageGrid grid(w, h, channels);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    require(in.gcount() == static_cast<std::streamsize>(row.size()),
            "truncated PNM pixel data in " + path);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        grid.planes[c](y, x) = row[static_cast<size_t>(x) * channels + c] * kInv255;
  }
  return grid;
}

void save_pnm(const ImageGrid& grid, const std::string& path, int channels) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open file for writing: " + path);
  out << (channels == 3 ? "P6" : "P5") << "\n"
      << grid.width << " " << grid.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(grid.width) * channels);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x)
      for (int c = 0; c < channels; ++c)
        row[static_cast<size_t>(x) * channels + c] =
            static_cast<unsigned char>(quantize(grid.planes[c](y, x)));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  require(out.good(), "write failed: " + path);
}

// --- PNG via libpng's simplified API ---

ImageGrid load_png(const std::string& path, bool gray_hint) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw std::invalid_argument("cannot read PNG " + path + ": " + img.message);

  const bool gray = gray_hint;
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  const size_t stride = static_cast<size_t>(PNG_IMAGE_ROW_STRIDE(img));
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::invalid_argument("cannot decode PNG " + path + ": " + img.message);
  }
  const int w = static_cast<int>(img.width);
  const int h = static_cast<int>(img.height);
  require(w > 0 && h > 0, "zero-dimension image: " + path);

  ImageGrid grid(w, h, channels);
  for (int y = 0; y < h; ++y) {
    const unsigned char* row = buffer.data() + static_cast<size_t>(y) * stride;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        grid.planes[c](y, x) = row[static_cast<size_t>(x) * channels + c] * kInv255;
  }
  return grid;
}

bool png_is_gray(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw std::invalid_argument("cannot read PNG " + path + ": " + img.message);
  const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png_image_free(&img);
  return gray;
}

void save_png(const ImageGrid& grid, const std::string& path, int channels) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(grid.width);
  img.height = static_cast<png_uint_32>(grid.height);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  std::vector<unsigned char> buffer(static_cast<size_t>(grid.width) * grid.height * channels);
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      for (int c = 0; c < channels; ++c)
        buffer[(static_cast<size_t>(y) * grid.width + x) * channels + c] =
            static_cast<unsigned char>(quantize(grid.planes[c](y, x)));

  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw std::runtime_error("cannot write PNG " + path + ": " + img.message);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ImageGrid load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  require(probe.good(), "cannot open image file: " + path);
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return load_pnm(path);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P')
    return load_png(path, png_is_gray(path));
  throw std::invalid_argument("unsupported image format: " + path);
}

void save_image(const ImageGrid& grid, const std::string& path) {
  require(grid.channels() == 1 || grid.channels() == 3,
          "save_image: channels must be 1 or 3");
  require(grid.width > 0 && grid.height > 0, "save_image: empty image");
  if (has_suffix(path, ".png")) {
    save_png(grid, path, grid.channels());
  } else if (has_suffix(path, ".ppm")) {
    require(grid.channels() == 3, "PPM requires a 3-channel image: " + path);
    save_pnm(grid, path, 3);
  } else if (has_suffix(path, ".pgm")) {
    require(grid.channels() == 1, "PGM requires a 1-channel image: " + path);
    save_pnm(grid, path, 1);
  } else {
    throw std::invalid_argument("unsupported output extension: " + path);
  }
}

ImageGrid grayscale(const ImageGrid& grid) {
  require(grid.channels() == 3, "grayscale: input must be 3-channel");
  ImageGrid out(grid.width, grid.height, 1);
  out.planes[0] =
      0.2126 * grid.planes[0] + 0.7152 * grid.planes[1] + 0.0722 * grid.planes[2];
  return out;
}

std::vector<BoxAnnotation> load_boxes_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open boxes file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed boxes JSON " + path + ": " + e.what());
  }
  require(doc.is_array(), "boxes JSON must be a list: " + path);
  std::vector<BoxAnnotation> boxes;
  boxes.reserve(doc.size());
  for (const auto& item : doc) {
    BoxAnnotation box;
    try {
      box.x_min = item.at("x_min").get<int>();
      box.y_min = item.at("y_min").get<int>();
      box.x_max = item.at("x_max").get<int>();
      box.y_max = item.at("y_max").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("malformed box entry in " + path + ": " + e.what());
    }
    boxes.push_back(box);
  }
  return boxes;
}

void save_boxes_json(const std::vector<BoxAnnotation>& boxes, const std::string& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& box : boxes) {
    doc.push_back({{"x_min", box.x_min},
                   {"y_min", box.y_min},
                   {"x_max", box.x_max},
                   {"y_max", box.y_max}});
  }
  std::ofstream out(path);
  require(out.good(), "cannot open file for writing: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace boxmask
