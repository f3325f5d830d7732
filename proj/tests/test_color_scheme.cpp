#include <doctest.h>

#include <array>
#include <cstdlib>
#include <numeric>

#include "digitour/color_scheme.hpp"
#include "digitour/error.hpp"
#include "helpers.hpp"

using namespace digitour;

namespace {

// Hex column of the published color table, typed in by hand.
constexpr std::array<std::uint32_t, 10> kPublishedHex = {
    0x5fc24f, 0xd62b22, 0x7f3bd9, 0x944d1b, 0xde5bbb,
    0xa3a3a3, 0xe3b540, 0x54bede, 0x0744ed, 0xf08132};

int max_channel_diff(Rgb a, Rgb b) {
  return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
}

}  // namespace

TEST_CASE("palette entries") {
  const auto& p = palette();
  for (int d = 0; d < 10; ++d) CHECK(p[d].digit == d);
  CHECK(p[0].color.h == 112.0);
  CHECK(p[0].color.s == 0.59);
  CHECK(p[0].color.v == 0.76);
  CHECK(p[5].color.s == 0.0);
  CHECK(p[5].color.v == 0.64);
  CHECK(p[9].color.h == 25.0);
  CHECK(p[9].color.s == 0.79);
  CHECK(p[9].color.v == 0.94);
}

TEST_CASE("palette converts to the published hex within 2 per channel") {
  for (int d = 0; d < 10; ++d) {
    CAPTURE(d);
    CHECK(max_channel_diff(hsv_to_rgb(palette()[d].color), hex_to_rgb(kPublishedHex[d])) <= 2);
    CHECK(palette()[d].reference_rgb_hex == kPublishedHex[d]);
  }
}

TEST_CASE("hsv_to_rgb corner cases") {
  CHECK(hsv_to_rgb({0, 0, 0}) == Rgb{0, 0, 0});
  CHECK(hsv_to_rgb({0, 0, 1}) == Rgb{255, 255, 255});
  CHECK(max_channel_diff(hsv_to_rgb({112, 0.59, 0.76}), Rgb{95, 194, 80}) <= 2);
  CHECK(hsv_to_rgb({120, 1, 1}) == Rgb{0, 255, 0});
  CHECK(hsv_to_rgb({240, 1, 1}) == Rgb{0, 0, 255});
  CHECK(hsv_to_rgb({360, 1, 1}) == Rgb{255, 0, 0});
}

TEST_CASE("rgb_to_hsv inverts hsv_to_rgb up to quantization") {
  for (int d = 0; d < 10; ++d) {
    const Rgb rgb = hsv_to_rgb(palette()[d].color);
    CHECK(hsv_to_rgb(rgb_to_hsv(rgb)) == rgb);
  }
}

TEST_CASE("render_tag layout") {
  SUBCASE("7 is zero padded") {
    const auto art = render_tag(7, 256);
    CHECK(art.leading_digit == 0);
    CHECK(art.trailing_digit == 7);
    CHECK(art.raster.width() == 256);
    CHECK(art.leading_region == PixelRect{0, 0, 256, 128});
    CHECK(art.trailing_region == PixelRect{0, 128, 256, 256});
    CHECK(art.raster.at(5, 5) == hsv_to_rgb(palette()[0].color));
    CHECK(art.raster.at(5, 250) == hsv_to_rgb(palette()[7].color));
    // disk is in the leading half
    CHECK(art.raster.at(static_cast<int>(art.circle_center_x),
                        static_cast<int>(art.circle_center_y)) == Rgb{0, 0, 0});
    CHECK(art.circle_center_y + art.circle_radius < 128);
  }
  SUBCASE("20") {
    const auto art = render_tag(20, 256);
    CHECK(art.leading_digit == 2);
    CHECK(art.trailing_digit == 0);
    CHECK(art.raster.at(5, 5) == hsv_to_rgb(palette()[2].color));
    CHECK(art.raster.at(5, 250) == hsv_to_rgb(palette()[0].color));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(render_tag(0, 256), InvalidTagNumber);
    CHECK_THROWS_AS(render_tag(21, 256), InvalidTagNumber);
    CHECK_THROWS_AS(render_tag(5, kMinTagSide - 1), InvalidImage);
    CHECK_NOTHROW(render_tag(5, kMinTagSide));
  }
}

TEST_CASE("render_tag has only palette, black pixels") {
  for (int n = 1; n <= 20; ++n) {
    const auto art = render_tag(n, 128);
    const Rgb lead = hsv_to_rgb(palette()[art.leading_digit].color);
    const Rgb trail = hsv_to_rgb(palette()[art.trailing_digit].color);
    bool ok = true;
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        const Rgb c = art.raster.at(x, y);
        ok &= c == Rgb{0, 0, 0} || c == (y < 64 ? lead : trail);
      }
    CHECK(ok);
  }
}

TEST_CASE("write_tag_sheet") {
  testing::TempDir dir("tags");
  SUBCASE("names") {
    const std::array<int, 2> nums = {1, 2};
    const auto paths = write_tag_sheet(nums, dir.path());
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].filename() == "tag_01.png");
    CHECK(paths[1].filename() == "tag_02.png");
  }
  SUBCASE("empty") {
    CHECK(write_tag_sheet(std::span<const int>{}, dir.path()).empty());
  }
  SUBCASE("invalid number writes nothing") {
    const std::array<int, 2> nums = {3, 25};
    CHECK_THROWS_AS(write_tag_sheet(nums, dir / "bad"), InvalidTagNumber);
    CHECK_FALSE(std::filesystem::exists(dir / "bad"));
  }
  SUBCASE("decoded fill colors match the palette exactly") {
    std::vector<int> nums(20);
    std::iota(nums.begin(), nums.end(), 1);
    const auto paths = write_tag_sheet(nums, dir.path(), 128);
    REQUIRE(paths.size() == 20);
    for (int i = 0; i < 20; ++i) {
      const RasterImage img = read_png(paths[i]);
      const int n = nums[i];
      // mean over non-black pixels per half
      for (int half = 0; half < 2; ++half) {
        long sum[3] = {0, 0, 0}, count = 0;
        for (int y = half * 64; y < half * 64 + 64; ++y)
          for (int x = 0; x < 128; ++x) {
            const Rgb c = img.at(x, y);
            if (c == Rgb{0, 0, 0}) continue;
            sum[0] += c.r;
            sum[1] += c.g;
            sum[2] += c.b;
            ++count;
          }
        REQUIRE(count > 0);
        const Rgb expected = hsv_to_rgb(palette()[half == 0 ? n / 10 : n % 10].color);
        CHECK(sum[0] == expected.r * count);
        CHECK(sum[1] == expected.g * count);
        CHECK(sum[2] == expected.b * count);
      }
    }
  }
}
