#include <catch2/catch_amalgamated.hpp>
#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "stam/errors.hpp"
#include "stam/idx.hpp"

namespace {

std::vector<std::uint8_t> image_fixture() {
  // magic 0x00000803, count 1, rows 2, cols 2, pixels 0 255 128 0
  return {0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x01,
          0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
          0,    255,  128,  0};
}

std::vector<std::uint8_t> label_fixture() {
  // magic 0x00000801, count 3, labels 7 0 9
  return {0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x03, 7, 0, 9};
}

}  // namespace

TEST_CASE("parses IDX image bytes") {
  const auto imgs = stam::parse_idx_images(image_fixture());
  REQUIRE(imgs.size() == 1);
  REQUIRE(imgs[0].height == 2);
  REQUIRE(imgs[0].width == 2);
  REQUIRE(imgs[0].pixels[0] == Catch::Approx(0.0));
  REQUIRE(imgs[0].pixels[1] == Catch::Approx(1.0));
  REQUIRE(imgs[0].pixels[2] == Catch::Approx(128.0 / 255.0));
  REQUIRE(imgs[0].pixels[3] == Catch::Approx(0.0));
}

TEST_CASE("parses IDX label bytes") {
  const auto labels = stam::parse_idx_labels(label_fixture());
  REQUIRE(labels == std::vector<int>{7, 0, 9});
}

TEST_CASE("rejects wrong image magic") {
  auto bytes = image_fixture();
  bytes[3] = 0x01;
  REQUIRE_THROWS_AS(stam::parse_idx_images(bytes), stam::data_error);
}

TEST_CASE("rejects wrong label magic") {
  auto bytes = label_fixture();
  bytes[3] = 0x03;
  REQUIRE_THROWS_AS(stam::parse_idx_labels(bytes), stam::data_error);
}

TEST_CASE("rejects truncated image payload") {
  auto bytes = image_fixture();
  bytes.pop_back();
  REQUIRE_THROWS_AS(stam::parse_idx_images(bytes), stam::data_error);
}

TEST_CASE("rejects truncated label header") {
  std::vector<std::uint8_t> bytes{0x00, 0x00, 0x08, 0x01, 0x00};
  REQUIRE_THROWS_AS(stam::parse_idx_labels(bytes), stam::data_error);
}

TEST_CASE("dataset load attaches labels and checks counts") {
  testutil::TempDir dir("idx");
  const auto imgs_path = dir.file("images");
  const auto labels_path = dir.file("labels");
  {
    const auto ib = image_fixture();
    const auto lb = std::vector<std::uint8_t>{0x00, 0x00, 0x08, 0x01,
                                              0x00, 0x00, 0x00, 0x01, 7};
    testutil::write_bytes(imgs_path, ib);
    testutil::write_bytes(labels_path, lb);
  }
  const auto ds = stam::load_idx_dataset(imgs_path, labels_path);
  REQUIRE(ds.size() == 1);
  REQUIRE(ds[0].label == 7);

  testutil::write_bytes(labels_path, label_fixture());  // count 3 != 1
  REQUIRE_THROWS_AS(stam::load_idx_dataset(imgs_path, labels_path),
                    stam::data_error);
}

TEST_CASE("missing file raises data_error") {
  REQUIRE_THROWS_AS(stam::load_idx_dataset("/nonexistent/i", "/nonexistent/l"),
                    stam::data_error);
}

TEST_CASE("write then load round-trips quantized pixels") {
  testutil::TempDir dir("idxrt");
  std::vector<stam::Image> imgs(2);
  for (int i = 0; i < 2; ++i) {
    imgs[i].height = 2;
    imgs[i].width = 2;
    imgs[i].pixels = {0.0, 1.0, 128.0 / 255.0, 37.0 / 255.0};
    imgs[i].label = i + 3;
  }
  const auto ip = dir.file("imgs");
  const auto lp = dir.file("labels");
  stam::write_idx_images(ip, imgs);
  stam::write_idx_labels(lp, {imgs[0].label, imgs[1].label});
  const auto back = stam::load_idx_dataset(ip, lp);
  REQUIRE(back.size() == 2);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(back[i].label == i + 3);
    for (int p = 0; p < 4; ++p)
      REQUIRE(back[i].pixels[p] == Catch::Approx(imgs[i].pixels[p]));
  }
}
