#include "boxmask/image.hpp"
#include "boxmask/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace boxmask;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("boxmask_image_" + name)).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

ImageGrid random_grid(int w, int h, int channels, std::uint64_t seed) {
  Rng rng(seed);
  ImageGrid grid(w, h, channels);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) grid.planes[c](y, x) = rng.uniform();
  return grid;
}

}  // namespace

TEST_CASE("load PPM maps samples by v/255") {
  const std::string path = temp_path("all255.ppm");
  write_bytes(path, {'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n',
                     255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255});
  const ImageGrid grid = load_image(path);
  CHECK(grid.width == 2);
  CHECK(grid.height == 2);
  CHECK(grid.channels() == 3);
  for (int c = 0; c < 3; ++c) CHECK((grid.planes[c] == 1.0).all());

  const std::string pgm = temp_path("zero.pgm");
  write_bytes(pgm, {'P', '5', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 0});
  const ImageGrid gray = load_image(pgm);
  CHECK(gray.channels() == 1);
  CHECK(gray.planes[0](0, 0) == 0.0);
}

TEST_CASE("PPM channel order is preserved") {
  const std::string path = temp_path("rgb.ppm");
  write_bytes(path, {'P', '6', '\n', '3', ' ', '1', '\n', '2', '5', '5', '\n',
                     255, 0, 0, 0, 255, 0, 0, 0, 255});
  const ImageGrid grid = load_image(path);
  CHECK(grid.at(0, 0, 0) == 1.0);
  CHECK(grid.at(0, 0, 1) == 0.0);
  CHECK(grid.at(1, 0, 1) == 1.0);
  CHECK(grid.at(2, 0, 2) == 1.0);
  CHECK(grid.at(2, 0, 0) == 0.0);
}

TEST_CASE("save/load round trip stays within quantization") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const ImageGrid gray = random_grid(4, 4, 1, seed);
    const std::string path = temp_path("rt" + std::to_string(seed) + ".pgm");
    save_image(gray, path);
    const ImageGrid back = load_image(path);
    CHECK((back.planes[0] - gray.planes[0]).abs().maxCoeff() <= 1.0 / 255.0);
  }
  const ImageGrid color = random_grid(5, 3, 3, 7);
  for (const char* ext : {".ppm", ".png"}) {
    const std::string path = temp_path(std::string("rt_color") + ext);
    save_image(color, path);
    const ImageGrid back = load_image(path);
    REQUIRE(back.channels() == 3);
    for (int c = 0; c < 3; ++c)
      CHECK((back.planes[c] - color.planes[c]).abs().maxCoeff() <= 1.0 / 255.0);
  }
}

TEST_CASE("saved PPM carries 3 samples per pixel") {
  const ImageGrid color = random_grid(4, 2, 3, 11);
  const std::string path = temp_path("samples.ppm");
  save_image(color, path);
  CHECK(fs::file_size(path) == std::string("P6\n4 2\n255\n").size() + 4 * 2 * 3);
}

TEST_CASE("1x1 white survives the round trip") {
  ImageGrid white(1, 1, 1, 1.0);
  const std::string path = temp_path("white.pgm");
  save_image(white, path);
  CHECK(load_image(path).planes[0](0, 0) == 1.0);
}

TEST_CASE("PNG round trip for gray") {
  const ImageGrid gray = random_grid(6, 4, 1, 5);
  const std::string path = temp_path("gray.png");
  save_image(gray, path);
  const ImageGrid back = load_image(path);
  REQUIRE(back.channels() == 1);
  CHECK((back.planes[0] - gray.planes[0]).abs().maxCoeff() <= 1.0 / 255.0);
}

TEST_CASE("load errors") {
  CHECK_THROWS(load_image(temp_path("does_not_exist.ppm")));

  const std::string bad = temp_path("bad.txt");
  write_bytes(bad, {'h', 'i', '\n'});
  CHECK_THROWS(load_image(bad));

  const std::string zero = temp_path("zero_dim.pgm");
  write_bytes(zero, {'P', '5', '\n', '0', ' ', '0', '\n', '2', '5', '5', '\n'});
  CHECK_THROWS(load_image(zero));

  const std::string truncated = temp_path("short.pgm");
  write_bytes(truncated, {'P', '5', '\n', '4', ' ', '4', '\n', '2', '5', '5', '\n', 1, 2});
  CHECK_THROWS(load_image(truncated));

  const std::string maxval = temp_path("16bit.pgm");
  write_bytes(maxval, {'P', '5', '\n', '1', ' ', '1', '\n', '6', '5', '5', '3', '5', '\n', 0, 0});
  CHECK_THROWS(load_image(maxval));
}

TEST_CASE("grayscale uses BT.709 weights") {
  ImageGrid grid(3, 1, 3);
  // (1,1,1), (0,0,0), (1,0,0)
  grid.at(0, 0, 0) = grid.at(0, 0, 1) = grid.at(0, 0, 2) = 1.0;
  grid.at(2, 0, 0) = 1.0;
  const ImageGrid gray = grayscale(grid);
  CHECK(gray.planes[0](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gray.planes[0](0, 1) == 0.0);
  CHECK(gray.planes[0](0, 2) == doctest::Approx(0.2126).epsilon(1e-12));

  ImageGrid one_channel(2, 2, 1);
  CHECK_THROWS(grayscale(one_channel));
}

TEST_CASE("grayscale stays within the channel range") {
  const ImageGrid grid = random_grid(8, 8, 3, 13);
  const ImageGrid gray = grayscale(grid);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const double lo = std::min({grid.at(x, y, 0), grid.at(x, y, 1), grid.at(x, y, 2)});
      const double hi = std::max({grid.at(x, y, 0), grid.at(x, y, 1), grid.at(x, y, 2)});
      CHECK(gray.planes[0](y, x) >= lo - 1e-12);
      CHECK(gray.planes[0](y, x) <= hi + 1e-12);
    }
}

TEST_CASE("box validation and area") {
  validate_box({0, 0, 1, 1}, 4, 4);
  CHECK_THROWS(validate_box({0, 0, 0, 1}, 4, 4));
  CHECK_THROWS(validate_box({-1, 0, 2, 2}, 4, 4));
  CHECK_THROWS(validate_box({0, 0, 5, 2}, 4, 4));
  CHECK(BoxAnnotation{1, 2, 3, 5}.area() == 6);
  CHECK(BoxAnnotation{0, 0, 1, 1}.area() == 1);
}

TEST_CASE("boxes JSON round trip") {
  const std::vector<BoxAnnotation> boxes = {{1, 2, 5, 6}, {0, 0, 3, 3}};
  const std::string path = temp_path("boxes.json");
  save_boxes_json(boxes, path);
  const auto back = load_boxes_json(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].x_min == 1);
  CHECK(back[0].y_max == 6);
  CHECK(back[1].x_max == 3);

  const std::string bad = temp_path("bad_boxes.json");
  std::ofstream(bad) << "{\"not\": \"a list\"}";
  CHECK_THROWS(load_boxes_json(bad));
  const std::string missing_field = temp_path("missing_field.json");
  std::ofstream(missing_field) << "[{\"x_min\": 0}]";
  CHECK_THROWS(load_boxes_json(missing_field));
}

TEST_CASE("tight_box finds the minimal enclosing box") {
  GroundTruthMask mask(6, 5);
  mask.data(1, 2) = 1;
  mask.data(3, 4) = 1;
  const BoxAnnotation box = tight_box(mask);
  CHECK(box.x_min == 2);
  CHECK(box.x_max == 5);
  CHECK(box.y_min == 1);
  CHECK(box.y_max == 4);
  CHECK_THROWS(tight_box(GroundTruthMask(3, 3)));
}
