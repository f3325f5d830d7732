#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "digitour/error.hpp"
#include "digitour/detector.hpp"
#include "digitour/metrics.hpp"
#include "helpers.hpp"

using namespace digitour;

namespace {

CubeFace teal_face(int n = 512) { return {FaceId::bottom, RasterImage(n, n, testing::kTeal)}; }

BBox square(int x0, int y0, int side) {
  return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x0 + side),
          static_cast<double>(y0 + side)};
}

}  // namespace

TEST_CASE("one 96 px tag gives one detection") {
  auto face = teal_face();
  testing::paste_tag(face.image, 13, 200, 150, 96);
  const auto dets = detect_tags(face, {}, "p/x");
  REQUIRE(dets.size() == 1);
  CHECK(iou(dets[0].bbox, square(200, 150, 96)) >= 0.8);
  CHECK(dets[0].confidence >= 0.6);
  CHECK(dets[0].confidence <= 1.0);
  CHECK(dets[0].image == "p/x");
  CHECK(dets[0].face == FaceId::bottom);
  CHECK(dets[0].source == DetectionSource::rule);
}

TEST_CASE("every tag number is detected as one box") {
  for (int n = 1; n <= 20; ++n) {
    CAPTURE(n);
    auto face = teal_face(256);
    testing::paste_tag(face.image, n, 80, 60, 80);
    const auto dets = detect_tags(face);
    REQUIRE(dets.size() == 1);
    CHECK(iou(dets[0].bbox, square(80, 60, 80)) >= 0.8);
  }
}

TEST_CASE("two tags 48 px apart") {
  auto face = teal_face();
  testing::paste_tag(face.image, 4, 100, 200, 96);
  testing::paste_tag(face.image, 17, 244, 200, 96);
  const auto dets = detect_tags(face);
  REQUIRE(dets.size() == 2);
  std::vector<BBox> gt = {square(100, 200, 96), square(244, 200, 96)};
  for (const auto& d : dets) {
    CHECK(std::max(iou(d.bbox, gt[0]), iou(d.bbox, gt[1])) >= 0.8);
  }
  CHECK(dets[0].confidence >= dets[1].confidence);
}

TEST_CASE("faces without tags") {
  CHECK(detect_tags({FaceId::front, RasterImage(256, 256, {255, 255, 255})}).empty());
  CHECK(detect_tags(teal_face(256)).empty());

  // a palette-colored patch with no dark marks is not a tag
  auto face = teal_face(256);
  const Rgb red = hsv_to_rgb(palette()[1].color);
  for (int y = 50; y < 130; ++y)
    for (int x = 50; x < 130; ++x) face.image.set(x, y, red);
  CHECK(detect_tags(face).empty());

  // too small
  auto tiny = teal_face(1024);
  testing::paste_tag(tiny.image, 5, 100, 100, 16);
  CHECK(detect_tags(tiny).empty());
}

TEST_CASE("palette mask") {
  DetectorParams p;
  for (int d = 0; d < 10; ++d) CHECK(is_palette_color(palette()[d].color, p));
  CHECK_FALSE(is_palette_color(rgb_to_hsv(testing::kTeal), p));
  CHECK_FALSE(is_palette_color({0, 0, 0.05}, p));
  CHECK_FALSE(is_palette_color({0, 0, 1.0}, p));
  RasterImage img(2, 1, testing::kTeal);
  img.set(1, 0, hsv_to_rgb(palette()[8].color));
  const auto mask = palette_mask(img, p);
  CHECK(mask == std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("confidence does not rise with added noise") {
  std::vector<double> mean_conf;
  for (double sigma : {0.0, 10.0, 20.0, 30.0}) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, sigma);
    double total = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
      auto face = teal_face(160);
      testing::paste_tag(face.image, 1 + t % 20, 40, 40, 72);
      if (sigma > 0) {
        auto px = face.image.pixels();
        for (auto& v : px) v = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0.0, 255.0) + 0.5);
      }
      // confidence of the detection on the tag; a miss counts as 0
      double conf = 0.0;
      for (const auto& d : detect_tags(face)) {
        if (iou(d.bbox, square(40, 40, 72)) >= 0.5) conf = std::max(conf, d.confidence);
      }
      total += conf;
    }
    mean_conf.push_back(total / trials);
  }

  // the tag is still found at the highest level
  CHECK(mean_conf.back() >= 0.6);
  for (std::size_t i = 1; i < mean_conf.size(); ++i) {
    CAPTURE(i);
    CHECK(mean_conf[i] <= mean_conf[i - 1] + 1e-12);
  }
}

TEST_CASE("yolo parsing") {
  auto dets = parse_yolo_detections("0 0.5 0.5 0.1 0.1 0.9\n", 1024, "p/a", FaceId::left);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].bbox.x_min == doctest::Approx(460.8));
  CHECK(dets[0].bbox.y_min == doctest::Approx(460.8));
  CHECK(dets[0].bbox.x_max == doctest::Approx(563.2));
  CHECK(dets[0].bbox.y_max == doctest::Approx(563.2));
  CHECK(dets[0].confidence == doctest::Approx(0.9));
  CHECK(dets[0].class_prior == 1);
  CHECK(dets[0].source == DetectionSource::imported);
  CHECK(dets[0].face == FaceId::left);

  CHECK(parse_yolo_detections("", 1024, "p/a", FaceId::left).empty());
  CHECK(parse_yolo_detections("\n  \n", 1024, "p/a", FaceId::left).size() == 0);
  CHECK(parse_yolo_detections("3 0.5 0.5 0.2 0.2", 100, "p/a", FaceId::left)[0].confidence == 1.0);

  CHECK_THROWS_AS(parse_yolo_detections("0 1.5 0.5 0.1 0.1", 1024, "", FaceId::left), ParseError);
  try {
    parse_yolo_detections("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1\n", 1024, "", FaceId::left);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_yolo_detections("x 0.5 0.5 0.1 0.1", 1024, "", FaceId::left), ParseError);
  CHECK_THROWS_AS(parse_yolo_detections("0 0.5 0.5 0.1 0.1 1.2", 1024, "", FaceId::left), ParseError);
  CHECK_THROWS_AS(parse_yolo_detections("-1 0.5 0.5 0.1 0.1", 1024, "", FaceId::left), ParseError);
}

TEST_CASE("import files") {
  testing::TempDir dir("import");
  std::ofstream(dir / "prop01_pano02_bottom.txt") << "19 0.25 0.25 0.5 0.5 0.7\n";
  auto dets = import_detections(dir / "prop01_pano02_bottom.txt", ImportFormat::yolo_txt, 200);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].image == "prop01_pano02");
  CHECK(dets[0].face == FaceId::bottom);
  CHECK(dets[0].class_prior == 20);
  CHECK(dets[0].bbox == BBox{0, 0, 100, 100});

  std::ofstream(dir / "noface.txt") << "0 0.5 0.5 0.1 0.1\n";
  CHECK_THROWS_AS(import_detections(dir / "noface.txt", ImportFormat::yolo_txt, 200), ParseError);
  CHECK_THROWS_AS(import_detections(dir / "missing_front.txt", ImportFormat::yolo_txt, 200), IoError);
  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(import_detections(dir / "bad.json", ImportFormat::json, 200), ParseError);
}

TEST_CASE("split_face_stem") {
  auto s = split_face_stem("pano_03_top");
  REQUIRE(s.has_value());
  CHECK(s->first == "pano_03");
  CHECK(s->second == FaceId::top);
  CHECK_FALSE(split_face_stem("pano03").has_value());
  CHECK_FALSE(split_face_stem("pano03_up").has_value());
}

TEST_CASE("detections json round trip") {
  std::vector<Detection> dets(2);
  dets[0] = {"prop01/pano01", FaceId::bottom, {1.5, 2, 30, 40.25}, 0.875, DetectionSource::rule, std::nullopt};
  dets[1] = {"prop01/pano02", FaceId::front, {0, 0, 10, 10}, 0.5, DetectionSource::imported, 7};
  const auto j = detections_to_json(dets);
  CHECK(j[0]["face"] == "bottom");
  CHECK(j[1]["source"] == "imported");
  CHECK(j[1]["class_prior"] == 7);
  CHECK_FALSE(j[0].contains("class_prior"));
  const auto back = detections_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(back[i].image == dets[i].image);
    CHECK(back[i].face == dets[i].face);
    CHECK(back[i].bbox == dets[i].bbox);
    CHECK(back[i].confidence == dets[i].confidence);
    CHECK(back[i].source == dets[i].source);
    CHECK(back[i].class_prior == dets[i].class_prior);
  }
  CHECK_THROWS_AS(detections_from_json(nlohmann::json::parse(R"([{"image":"a"}])")), ParseError);
}
