#include <doctest.h>

#include <cmath>
#include <random>

#include "digitour/error.hpp"
#include "digitour/projection.hpp"

using namespace digitour;

namespace {

void check_dir(const Direction& d, double x, double y, double z) {
  CHECK(d.x == doctest::Approx(x).epsilon(1e-12));
  CHECK(d.y == doctest::Approx(y).epsilon(1e-12));
  CHECK(d.z == doctest::Approx(z).epsilon(1e-12));
}

Direction random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(n(rng), n(rng), n(rng));
}

}  // namespace

TEST_CASE("face names") {
  for (FaceId f : kAllFaces) CHECK(parse_face(face_name(f)) == f);
  CHECK_FALSE(parse_face("sideways").has_value());
}

TEST_CASE("face centres") {
  check_dir(face_uv_to_direction(FaceId::front, 0.5, 0.5), 0, 0, 1);
  check_dir(face_uv_to_direction(FaceId::bottom, 0.5, 0.5), 0, -1, 0);
  check_dir(face_uv_to_direction(FaceId::right, 0.5, 0.5), 1, 0, 0);
  check_dir(face_uv_to_direction(FaceId::left, 0.5, 0.5), -1, 0, 0);
  check_dir(face_uv_to_direction(FaceId::back, 0.5, 0.5), 0, 0, -1);
  check_dir(face_uv_to_direction(FaceId::top, 0.5, 0.5), 0, 1, 0);
}

TEST_CASE("direction_to_face_uv") {
  auto f = direction_to_face_uv({0, 0, 1});
  CHECK(f.face == FaceId::front);
  CHECK(f.u == doctest::Approx(0.5));
  CHECK(f.v == doctest::Approx(0.5));
  f = direction_to_face_uv({0, -1, 0});
  CHECK(f.face == FaceId::bottom);
  CHECK(f.u == doctest::Approx(0.5));
  CHECK(f.v == doctest::Approx(0.5));
  // ties: x beats y beats z
  CHECK(direction_to_face_uv(normalized(1, 1, 1)).face == FaceId::right);
  CHECK(direction_to_face_uv(normalized(0, -1, 1)).face == FaceId::bottom);
}

TEST_CASE("front face continues onto bottom without a flip") {
  // bottom edge of front (v = 1) meets top edge of bottom (v = 0) at the same u
  for (double u : {0.1, 0.5, 0.8}) {
    const Direction a = face_uv_to_direction(FaceId::front, u, 1.0);
    const Direction b = face_uv_to_direction(FaceId::bottom, u, 0.0);
    CHECK(a.x == doctest::Approx(b.x));
    CHECK(a.y == doctest::Approx(b.y));
    CHECK(a.z == doctest::Approx(b.z));
    const Direction c = face_uv_to_direction(FaceId::front, u, 0.0);
    const Direction d = face_uv_to_direction(FaceId::top, u, 1.0);
    CHECK(c.x == doctest::Approx(d.x));
    CHECK(c.z == doctest::Approx(d.z));
  }
}

TEST_CASE("direction round trip over random directions") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Direction d = random_direction(rng);
    const FaceUv f = direction_to_face_uv(d);
    REQUIRE(f.u >= 0.0);
    REQUIRE(f.u <= 1.0);
    REQUIRE(f.v >= 0.0);
    REQUIRE(f.v <= 1.0);
    const Direction e = face_uv_to_direction(f.face, f.u, f.v);
    worst = std::max({worst, std::abs(e.x - d.x), std::abs(e.y - d.y), std::abs(e.z - d.z)});
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("direction_to_plane_uv") {
  CHECK_FALSE(direction_to_plane_uv({0, 0, -1}, FaceId::front).has_value());
  const auto p = direction_to_plane_uv(normalized(3, 0, 1), FaceId::front);
  REQUIRE(p.has_value());
  CHECK(p->u == doctest::Approx(2.0));  // x/z = 3 -> u = (1 + 3)/2
  CHECK(p->v == doctest::Approx(0.5));
}

TEST_CASE("equirect mapping") {
  auto p = direction_to_equirect({0, 0, 1}, 4096, 2048);
  CHECK(p.px == doctest::Approx(2048));
  CHECK(p.py == doctest::Approx(1024));
  p = direction_to_equirect({0, -1, 0}, 4096, 2048);
  CHECK(p.py == doctest::Approx(2048));
  CHECK(p.px == doctest::Approx(2048));
  p = direction_to_equirect({1, 0, 0}, 4096, 2048);
  CHECK(p.px == doctest::Approx(3072));
  CHECK(p.py == doctest::Approx(1024));

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Direction d = random_direction(rng);
    const auto q = direction_to_equirect(d, 4096, 2048);
    const Direction e = equirect_to_direction(q.px, q.py, 4096, 2048);
    CHECK(std::abs(e.x - d.x) + std::abs(e.y - d.y) + std::abs(e.z - d.z) < 1e-9);
  }
}

TEST_CASE("face_point_to_equirect") {
  auto p = face_point_to_equirect(FaceId::front, 511.5, 511.5, 1024, 4096, 2048);
  CHECK(p.px == doctest::Approx(2048));
  CHECK(p.py == doctest::Approx(1024));
  p = face_point_to_equirect(FaceId::bottom, 511.5, 511.5, 1024, 4096, 2048);
  CHECK(p.py == doctest::Approx(2048));

  // the equirect point and the face point describe the same direction
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-0.5, 1023.5);
  for (FaceId f : kAllFaces) {
    for (int i = 0; i < 200; ++i) {
      const double x = uni(rng), y = uni(rng);
      const auto q = face_point_to_equirect(f, x, y, 1024, 4096, 2048);
      const Direction a = equirect_to_direction(q.px, q.py, 4096, 2048);
      const Direction b = face_uv_to_direction(f, (x + 0.5) / 1024, (y + 0.5) / 1024);
      const Direction bn = normalized(b.x, b.y, b.z);
      CHECK(std::abs(a.x - bn.x) + std::abs(a.y - bn.y) + std::abs(a.z - bn.z) < 1e-9);
    }
  }
}

TEST_CASE("equirect_to_cubemap") {
  SUBCASE("constant field is exact both ways") {
    const RasterImage grey(64, 32, {90, 91, 92});
    const CubeFaceSet faces = equirect_to_cubemap(grey, 16);
    CHECK(faces.face_size() == 16);
    for (FaceId f : kAllFaces) CHECK(faces.face(f) == RasterImage(16, 16, {90, 91, 92}));
    CHECK(cubemap_to_equirect(faces, 64, 32) == grey);
  }
  SUBCASE("sizes") {
    const CubeFaceSet faces = equirect_to_cubemap(RasterImage(4096, 2048), 1024);
    for (FaceId f : kAllFaces) {
      CHECK(faces.face(f).width() == 1024);
      CHECK(faces.face(f).height() == 1024);
    }
  }
  SUBCASE("longitude ramp: front centre column holds the lon 0 value") {
    const int w = 720, h = 360;
    RasterImage ramp(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ramp.set(x, y, {static_cast<std::uint8_t>(x * 255 / w), 0, 0});
    const CubeFaceSet faces = equirect_to_cubemap(ramp, 128);
    // front face centre sits between columns 63 and 64, at lon = +-(0.5/64)
    // of the face half width; check against direct sampling at lon 0.
    const auto expected = sample_equirect(ramp, w / 2.0, h / 2.0);
    for (int y = 40; y < 88; ++y) {
      const int left = faces.face(FaceId::front).at(63, y).r;
      const int right = faces.face(FaceId::front).at(64, y).r;
      CHECK(std::abs((left + right) / 2.0 - expected[0]) <= 1.0);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(equirect_to_cubemap(RasterImage(), 16), InvalidImage);
    CHECK_THROWS_AS(equirect_to_cubemap(RasterImage(8, 4), 0), InvalidImage);
    std::array<RasterImage, 6> bad;
    for (auto& i : bad) i = RasterImage(4, 4);
    bad[2] = RasterImage(5, 4);
    CHECK_THROWS_AS(CubeFaceSet{bad}, InvalidImage);
  }
}

TEST_CASE("sampling") {
  RasterImage img(4, 2);
  img.set(0, 0, {0, 0, 0});
  img.set(3, 0, {200, 0, 0});
  // halfway between the last and first column wraps for equirect sampling
  CHECK(sample_equirect(img, 4.0, 0.5)[0] == doctest::Approx(100.0));
  CHECK(sample_clamped(img, 4.0, 0.5)[0] == doctest::Approx(200.0));
  CHECK(sample_clamped(img, 0.5, 0.5)[0] == doctest::Approx(0.0));
}

TEST_CASE("equirect_extent") {
  const int w = 1000;
  std::vector<EquirectPoint> pts = {{990, 10}, {5, 20}, {995, 15}};
  auto e = equirect_extent(pts, w);
  CHECK(e.wrapped);
  CHECK(e.x_min == doctest::Approx(990));
  CHECK(e.x_max == doctest::Approx(5));
  CHECK(e.y_min == doctest::Approx(10));
  CHECK(e.y_max == doctest::Approx(20));
  CHECK(e.center_x(w) == doctest::Approx(997.5));

  pts = {{100, 0}, {300, 0}, {200, 0}};
  e = equirect_extent(pts, w);
  CHECK_FALSE(e.wrapped);
  CHECK(e.x_min == doctest::Approx(100));
  CHECK(e.x_max == doctest::Approx(300));
  CHECK(e.center_x(w) == doctest::Approx(200));
}
