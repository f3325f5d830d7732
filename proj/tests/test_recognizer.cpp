#include <doctest.h>

#include <random>

#include "digitour/recognizer.hpp"
#include "helpers.hpp"

using namespace digitour;

namespace {

testing::TagScene clean_scene(int number, int side = 96) {
  return testing::tag_scene(render_tag(number, side).raster, 256, 70, 60);
}

}  // namespace

TEST_CASE("palette distance") {
  for (int d = 0; d < 10; ++d) {
    const auto [digit, dist] = nearest_palette_digit(palette()[d].color);
    CHECK(digit == d);
    CHECK(dist == doctest::Approx(0.0));
  }
  // hue difference wraps around 360
  const HsvColor a{359, 0.8, 0.8}, b{1, 0.8, 0.8};
  CHECK(palette_distance(a, b) == doctest::Approx(1.6 * 2.0 / 180.0));
  // grey ignores hue entirely
  CHECK(palette_distance({100, 0, 0.64}, palette()[5].color) == doctest::Approx(0.0));
}

TEST_CASE("every clean tag reads back") {
  for (int n = 1; n <= 20; ++n) {
    CAPTURE(n);
    const auto s = clean_scene(n);
    const auto r = classify_tag(s.face, s.detection);
    REQUIRE(r.ok());
    CHECK(*r.number == n);
    CHECK(*r.leading_digit == n / 10);
    CHECK(*r.trailing_digit == n % 10);
    CHECK(r.confidence >= 0.9 * s.detection.confidence);
    CHECK(r.confidence <= 1.0);
    REQUIRE(r.leading.has_value());
    CHECK(r.leading->nearest_digit == n / 10);
  }
}

TEST_CASE("confidence scales with the detection confidence") {
  auto s = clean_scene(13);
  s.detection.confidence = 0.5;
  const auto r = classify_tag(s.face, s.detection);
  REQUIRE(r.ok());
  CHECK(*r.number == 13);
  CHECK(r.confidence >= 0.45);
  CHECK(r.confidence <= 0.5);
}

TEST_CASE("a tag rotated by 180 degrees reads the same") {
  for (int n : {1, 7, 12, 16, 20}) {
    CAPTURE(n);
    const auto tag = rotate_180(render_tag(n, 96).raster);
    const auto s = testing::tag_scene(tag, 256, 70, 60);
    const auto r = classify_tag(s.face, s.detection);
    REQUIRE(r.ok());
    CHECK(*r.number == n);
  }
}

TEST_CASE("noisy tag 20 reads correctly") {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> dh(-10.0, 10.0), dv(-0.05, 0.05);
  int correct = 0;
  for (int t = 0; t < 100; ++t) {
    const auto tag = testing::recolored_tag(20, 96, testing::shifted(2, dh(rng), dv(rng)),
                                            testing::shifted(0, dh(rng), dv(rng)));
    const auto s = testing::tag_scene(tag, 256, 70, 60);
    const auto r = classify_tag(s.face, s.detection);
    correct += r.ok() && *r.number == 20;
  }
  CHECK(correct >= 99);
}

TEST_CASE("failures") {
  SUBCASE("halves reading 2 and 5 give invalid_number") {
    const auto tag = testing::recolored_tag(15, 96, palette()[2].color, palette()[5].color);
    const auto s = testing::tag_scene(tag, 256, 70, 60);
    const auto r = classify_tag(s.face, s.detection);
    CHECK_FALSE(r.ok());
    CHECK(r.failure == ReadingFailure::invalid_number);
    CHECK(r.leading_digit == 2);
    CHECK(r.trailing_digit == 5);
    CHECK(r.leading.has_value());
    CHECK(r.trailing.has_value());
  }
  SUBCASE("too small") {
    auto s = clean_scene(13);
    s.detection.bbox = {70, 60, 80, 70};
    const auto r = classify_tag(s.face, s.detection);
    CHECK(r.failure == ReadingFailure::too_small);
    CHECK(r.confidence == 0.0);
  }
  SUBCASE("no circle") {
    RasterImage tag(96, 96, hsv_to_rgb(palette()[1].color));
    for (int y = 48; y < 96; ++y)
      for (int x = 0; x < 96; ++x) tag.set(x, y, hsv_to_rgb(palette()[3].color));
    const auto s = testing::tag_scene(tag, 256, 70, 60);
    const auto r = classify_tag(s.face, s.detection);
    CHECK(r.failure == ReadingFailure::no_circle);
  }
  SUBCASE("no color") {
    RasterImage face(256, 256, {255, 255, 255});
    for (int y = 80; y < 100; ++y)
      for (int x = 110; x < 130; ++x) {
        const double dx = x + 0.5 - 120, dy = y + 0.5 - 90;
        if (dx * dx + dy * dy < 81) face.set(x, y, {0, 0, 0});
      }
    Detection d;
    d.bbox = {70, 60, 166, 156};
    d.confidence = 1.0;
    const auto r = classify_tag({FaceId::front, face}, d);
    CHECK_FALSE(r.ok());
    CHECK(r.failure == ReadingFailure::no_color);
  }
}

TEST_CASE("failure names") {
  for (auto f : {ReadingFailure::too_small, ReadingFailure::no_circle, ReadingFailure::no_color,
                 ReadingFailure::invalid_number}) {
    CHECK(parse_failure(failure_name(f)) == f);
  }
  CHECK_FALSE(parse_failure("nope").has_value());
}

TEST_CASE("batch keeps input order") {
  std::array<RasterImage, 6> faces;
  for (auto& f : faces) f = RasterImage(256, 256, testing::kTeal);
  const int nums[3] = {3, 18, 9};
  std::vector<Detection> dets;
  for (int i = 0; i < 3; ++i) {
    const FaceId id = kAllFaces[i];
    const auto s = testing::tag_scene(render_tag(nums[i], 80).raster, 256, 40 + 30 * i, 50);
    faces[static_cast<int>(id)] = s.face.image;
    Detection d = s.detection;
    d.face = id;
    dets.push_back(d);
  }
  const CubeFaceSet set(faces);
  CHECK(classify_batch(set, std::span<const Detection>{}).empty());
  const auto out = classify_batch(set, dets);
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(out[i].ok());
    CHECK(*out[i].number == nums[i]);
    CHECK(out[i].detection.face == kAllFaces[i]);
  }

  // a detection whose face is unknown fails in place
  std::vector<Detection> mixed = {dets[0], dets[1], dets[2]};
  mixed[1].image = "other/pano";
  const FaceLookup lookup = [&](std::string_view image, FaceId f) -> const RasterImage* {
    return image == "prop/pano" ? &set.face(f) : nullptr;
  };
  const auto m = classify_batch(lookup, mixed);
  REQUIRE(m.size() == 3);
  CHECK(m[0].ok());
  CHECK(m[1].failure == ReadingFailure::too_small);
  CHECK(m[2].ok());
}

TEST_CASE("readings json round trip") {
  const auto s = clean_scene(11);
  std::vector<TagReading> rs = {classify_tag(s.face, s.detection)};
  auto bad = s;
  bad.detection.bbox = {0, 0, 5, 5};
  rs.push_back(classify_tag(bad.face, bad.detection));
  const auto j = readings_to_json(rs);
  CHECK(j[0]["number"] == 11);
  CHECK(j[0]["failure_reason"].is_null());
  CHECK(j[1]["number"].is_null());
  CHECK(j[1]["failure_reason"] == "too_small");
  const auto back = readings_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.size() == 2);
  CHECK(back[0].number == 11);
  CHECK(back[0].confidence == rs[0].confidence);
  CHECK(back[0].detection.bbox == rs[0].detection.bbox);
  CHECK(back[0].detection.confidence == rs[0].detection.confidence);
  CHECK(back[1].failure == ReadingFailure::too_small);
  CHECK_FALSE(back[1].ok());
}
