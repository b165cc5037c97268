#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "avdn/raster_env.hpp"
#include "avdn/synthetic.hpp"
#include "oracles.hpp"

using namespace avdn;

namespace {

const EnvironmentBundle& small_world() {
  static const EnvironmentBundle b = generate_synthetic_world({.seed = 7, .size_px = 512, .meters_per_pixel = 2.0,
                                                               .object_count = 10});
  return b;
}

double mean_value(const Image& img) {
  double s = 0;
  for (auto v : img.bytes()) s += v;
  return s / img.bytes().size();
}

}  // namespace

TEST(CameraModel, WidthFromAltitude) {
  const CameraModel cam;
  EXPECT_NEAR(width_from_altitude(cam, 100), 200.0, 1e-12);
  EXPECT_NEAR(width_from_altitude(cam, 50), 100.0, 1e-12);
  const CameraModel narrow{60.0, 10.0, 500.0};
  EXPECT_NEAR(width_from_altitude(narrow, 100), 200.0 * std::tan(std::numbers::pi / 6), 1e-9);
  EXPECT_NEAR(width_from_altitude(narrow, 100), 115.47, 1e-2);
}

TEST(CameraModel, AltitudeOutOfRange) {
  const CameraModel cam;
  try {
    width_from_altitude(cam, 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AltitudeOutOfRange);
  }
  EXPECT_THROW(width_from_altitude(cam, 501.0), Error);
}

TEST(CameraModel, AltitudeFromWidth) {
  const CameraModel cam;
  EXPECT_NEAR(altitude_from_width(cam, 200), 100.0, 1e-12);
  const CameraModel narrow{60.0, 10.0, 500.0};
  EXPECT_NEAR(altitude_from_width(narrow, 115.4701), 100.0, 1e-4);
  try {
    altitude_from_width(cam, 5000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WidthOutOfRange);
  }
}

TEST(CameraModel, RoundTripAndMonotone) {
  std::mt19937_64 gen(1);
  for (double fov : {30.0, 60.0, 90.0, 120.0}) {
    const CameraModel cam{fov, 10.0, 500.0};
    std::uniform_real_distribution<double> h(cam.min_altitude, cam.max_altitude);
    for (int i = 0; i < 1000; ++i) {
      const double a = h(gen);
      EXPECT_NEAR(altitude_from_width(cam, width_from_altitude(cam, a)), a, 1e-9);
      EXPECT_LT(width_from_altitude(cam, a), width_from_altitude(cam, std::min(a + 0.01, cam.max_altitude)) + 1e-15);
    }
    EXPECT_NEAR(altitude_from_width(cam, width_from_altitude(cam, cam.max_altitude)), cam.max_altitude, 1e-9);
  }
}

TEST(RasterEnvironment, RejectsTinyRasters) {
  EXPECT_THROW(RasterEnvironment("x", Image(32, 100), 1.0), Error);
  EXPECT_THROW(RasterEnvironment("x", Image(100, 100), 0.0), Error);
  const RasterEnvironment env("x", Image(100, 80), 0.5);
  EXPECT_EQ(env.extent(), (AxisRect{{0, 0}, {50, 40}}));
}

TEST(InBounds, Cases) {
  const RasterEnvironment env("x", Image(100, 100), 1.0);
  EXPECT_TRUE(in_bounds(env, {{50, 50}, 10, Heading(33)}));
  EXPECT_FALSE(in_bounds(env, {{6, 50}, 14, Heading(0)}));  // corner at x = -1
  EXPECT_TRUE(in_bounds(env, {{7, 50}, 14, Heading(0)}));   // touches x = 0
  // A square turned 45 degrees whose corners touch the four edge midpoints.
  EXPECT_TRUE(in_bounds(env, {{50, 50}, 100 / std::sqrt(2.0), Heading(45)}));
  EXPECT_FALSE(in_bounds(env, {{50, 50}, 100 / std::sqrt(2.0) + 1e-3, Heading(45)}));
}

TEST(Observe, AxisAlignedNearestIsExactCrop) {
  const auto& env = small_world().env;
  const double mpp = env.meters_per_pixel();
  const int k = 40;
  // Left edge at column 100, top edge at row 200.
  const double left = 100 * mpp, top = (env.pixels().height() - 200) * mpp;
  const ViewArea v{{left + k * mpp / 2, top - k * mpp / 2}, k * mpp, Heading(0)};
  const auto obs = observe(env, v, k, Sampling::Nearest);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) ASSERT_EQ(obs.image.at(c, r), env.pixels().at(100 + c, 200 + r));
  }
  EXPECT_DOUBLE_EQ(obs.compass.degrees(), 0.0);
}

TEST(Observe, HalfTurnEqualsRotatedImage) {
  const auto& env = small_world().env;
  const ViewArea v{{400, 500}, 150, Heading(0)};
  for (auto mode : {Sampling::Nearest, Sampling::Bilinear}) {
    const auto a = observe(env, v, 96, mode);
    const auto b = observe(env, {v.center, v.width, Heading(180)}, 96, mode);
    const auto rot = oracle::rotate_180(a.image);
    for (std::size_t i = 0; i < rot.bytes().size(); ++i) ASSERT_NEAR(rot.bytes()[i], b.image.bytes()[i], 2);
  }
}

TEST(Observe, QuarterTurnMatchesImageRotationOracle) {
  const auto& env = small_world().env;
  const ViewArea v{{520, 480}, 180, Heading(0)};
  const auto north = observe(env, v, 128);
  const auto east = observe(env, {v.center, v.width, Heading(90)}, 128);
  const auto expected = oracle::rotate_ccw(north.image);
  for (std::size_t i = 0; i < expected.bytes().size(); ++i) ASSERT_NEAR(expected.bytes()[i], east.image.bytes()[i], 2);
}

TEST(Observe, MeanMatchesFootprintRasterMean) {
  const auto& env = small_world().env;
  const double mpp = env.meters_per_pixel();
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> pos(200, 824), wid(40, 300), ang(0, 360);
  for (int trial = 0; trial < 30; ++trial) {
    const ViewArea v{{pos(gen), pos(gen)}, wid(gen), Heading(ang(gen))};
    if (!in_bounds(env, v)) continue;
    const auto obs = observe(env, v, 224);
    const auto region = oracle::rotated_square(v.center.x, v.center.y, v.width, v.rotation.degrees());
    double sum = 0;
    long long n = 0;
    for (int r = 0; r < env.pixels().height(); ++r) {
      for (int c = 0; c < env.pixels().width(); ++c) {
        const double x = (c + 0.5) * mpp, y = (env.pixels().height() - r - 0.5) * mpp;
        if (!oracle::inside(region, x, y)) continue;
        const Rgb p = env.pixels().at(c, r);
        sum += p.r + p.g + p.b;
        n += 3;
      }
    }
    EXPECT_NEAR(mean_value(obs.image), sum / n, 10.0) << "trial " << trial;
  }
}

TEST(Observe, DeterministicAndBoundsChecked) {
  const auto& env = small_world().env;
  const ViewArea v{{300, 300}, 120, Heading(17)};
  EXPECT_EQ(observe(env, v).image, observe(env, v).image);
  try {
    observe(env, {{10, 10}, 120, Heading(0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfBounds);
  }
}

TEST(SyntheticWorld, Deterministic) {
  const SyntheticWorldSpec spec{.seed = 3, .size_px = 256, .meters_per_pixel = 2.0, .object_count = 4};
  const auto a = generate_synthetic_world(spec);
  const auto b = generate_synthetic_world(spec);
  EXPECT_EQ(a.env.pixels(), b.env.pixels());
  EXPECT_EQ(a.objects, b.objects);
  const auto c = generate_synthetic_world({.seed = 4, .size_px = 256, .meters_per_pixel = 2.0, .object_count = 4});
  EXPECT_NE(a.env.pixels(), c.env.pixels());
}

TEST(SyntheticWorld, NoObjects) {
  const auto w = generate_synthetic_world({.seed = 1, .size_px = 128, .meters_per_pixel = 1.0, .object_count = 0});
  EXPECT_TRUE(w.objects.empty());
}

TEST(SyntheticWorld, Seed7ObjectsAreDisjointAndInside) {
  const auto w = generate_synthetic_world({.seed = 7, .size_px = 1024, .meters_per_pixel = 2.0, .object_count = 20});
  ASSERT_EQ(w.objects.size(), 20u);
  const AxisRect ext = w.env.extent();
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    const auto& a = w.objects[i];
    EXPECT_TRUE(contains(ext, a.min) && contains(ext, a.max));
    EXPECT_GE(a.width(), 60.0);
    EXPECT_LE(a.width(), 200.0);
    EXPECT_GE(a.height(), 60.0);
    EXPECT_LE(a.height(), 200.0);
    for (std::size_t j = i + 1; j < w.objects.size(); ++j) {
      const auto& b = w.objects[j];
      const bool overlap = a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y;
      EXPECT_FALSE(overlap) << i << " vs " << j;
    }
  }
}

TEST(EnvironmentBundle, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "avdn_env_roundtrip";
  std::filesystem::remove_all(dir);
  const auto w = generate_synthetic_world({.seed = 9, .size_px = 200, .meters_per_pixel = 1.5, .object_count = 2});
  save_environment(w, dir);
  const auto back = load_environment(dir, w.env.env_id());
  EXPECT_EQ(back.env.pixels(), w.env.pixels());
  EXPECT_EQ(back.env.meters_per_pixel(), w.env.meters_per_pixel());
  EXPECT_EQ(back.objects, w.objects);

  EnvironmentStore store(dir);
  EXPECT_EQ(store.list(), std::vector<std::string>{w.env.env_id()});
  EXPECT_EQ(store.get(w.env.env_id())->objects, w.objects);
  try {
    store.get("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownEnvironment);
  }
}

TEST(Png, EncodeDecodeRoundTrip) {
  Image img(7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) img.set(x, y, {static_cast<std::uint8_t>(x * 30), static_cast<std::uint8_t>(y * 50), 9});
  EXPECT_EQ(decode_png(encode_png(img)), img);
  EXPECT_THROW(decode_png({1, 2, 3}), Error);
}

TEST(Base64, KnownVectors) {
  auto enc = [](std::string s) { return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end())); };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto d = base64_decode("Zm9vYg==");
  EXPECT_EQ(std::string(d.begin(), d.end()), "foob");
}
