#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relight/oracles.hpp"
#include "relight/rng.hpp"
#include "relight/scene.hpp"
#include "relight/solar.hpp"

using namespace relight;

TEST_CASE("SPA reference case within 0.3 degrees") {
  const auto& ref = oracle::spa_reference_case();
  const solar::SunPosition p = solar::sun_position(ref.geo);
  CHECK(std::abs(p.zenith_deg - ref.zenith_deg) < 0.3);
  CHECK(std::abs(solar::wrap_azimuth(p.azimuth_deg - ref.azimuth_north_deg)) < 0.3);
}

TEST_CASE("equinox solar noon at the equator is nearly overhead") {
  // 2024-03-20 12:07:30 UTC at (0,0): true solar noon within seconds.
  const solar::SunPosition p = solar::sun_position({0.0, 0.0, 1710936450});
  CHECK(p.zenith_deg < 1.0);
}

TEST_CASE("local solar midnight puts the sun below the horizon without error") {
  // Same longitude, twelve hours later.
  const solar::SunPosition p = solar::sun_position({0.0, 0.0, 1710936450 + 43200});
  CHECK(p.zenith_deg > 90.0);
  CHECK_FALSE(solar::above_horizon(p));
}

TEST_CASE("timestamps outside 1950-2050 are rejected") {
  CHECK_THROWS_AS(solar::sun_position({0, 0, -700000000000}), ValidationError);
  CHECK_THROWS_AS(solar::sun_position({0, 0, 4102444800}), ValidationError);
  CHECK_THROWS_AS(solar::sun_position({91.0, 0, 0}), ValidationError);
}

TEST_CASE("agrees with the independently formulated ephemeris") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const solar::GeoTime gt{rng.range(-65, 65), rng.range(-180, 180),
                            static_cast<int64_t>(rng.range(0, 2.4e9))};
    const auto a = solar::sun_position(gt);
    const auto b = oracle::sun_position_reference(gt);
    const auto va = scene::sun_direction(a);
    const auto vb = scene::sun_direction(b);
    const double dot = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
    CHECK(dot > std::cos(0.1 * 3.14159265 / 180.0));
  }
}

TEST_CASE("sun direction is continuous over 10-second steps") {
  Rng rng(22);
  for (int i = 0; i < 500; ++i) {
    solar::GeoTime gt{rng.range(-65, 65), rng.range(-180, 180),
                      static_cast<int64_t>(rng.range(0, 2.4e9))};
    const auto a = scene::sun_direction(solar::sun_position(gt));
    gt.utc_seconds += 10;
    const auto b = scene::sun_direction(solar::sun_position(gt));
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    CHECK(dot > std::cos(0.1 * 3.14159265 / 180.0));
  }
}

TEST_CASE("discretize rounds to the nearest ten, ties away from zero") {
  const auto r = solar::discretize({-63.2, 57.8});
  CHECK(r.azimuth_deg == -60.0);
  CHECK(r.zenith_deg == 60.0);

  CHECK(solar::discretize({95.0, 10.0}).azimuth_deg == 100.0);  // tie away from zero
  CHECK(solar::discretize({-15.0, 80.0}).azimuth_deg == -20.0);
  CHECK(solar::discretize({0.0, 0.0}).azimuth_deg == 0.0);
  CHECK(solar::discretize({0.0, 0.0}).zenith_deg == 0.0);

  // Azimuth wrap: rounding can land on -180, which normalizes to +180.
  CHECK(solar::discretize({-176.0, 10.0}).azimuth_deg == 180.0);
}

TEST_CASE("explicit grid mode snaps to the reference table positions") {
  const solar::DiscretizeConfig grid{solar::default_positions()};
  const auto p = solar::discretize({94.7, 10.2}, grid);
  CHECK(p.azimuth_deg == 95.0);
  CHECK(p.zenith_deg == 10.0);
}

TEST_CASE("discretize is idempotent in both modes") {
  Rng rng(23);
  const solar::DiscretizeConfig grid{solar::default_positions()};
  for (int i = 0; i < 10000; ++i) {
    const solar::SunPosition p{rng.range(-179.9, 180.0), rng.range(0.0, 179.0)};
    const auto once = solar::discretize(p);
    CHECK(solar::discretize(once) == once);
    const auto snapped = solar::discretize(p, grid);
    CHECK(solar::discretize(snapped, grid) == snapped);
  }
}

TEST_CASE("light encoding is the documented affine map with exact inverse") {
  const auto v = solar::encode_light({-60, 60});
  CHECK(v.azimuth == doctest::Approx(-1.0 / 3).epsilon(1e-15));
  CHECK(v.zenith == doctest::Approx(2.0 / 3).epsilon(1e-15));

  CHECK(solar::encode_light({0, 0}) == solar::LightVector{0, 0});
  CHECK(solar::encode_light({180, 90}) == solar::LightVector{1.0, 1.0});

  Rng rng(24);
  for (int i = 0; i < 1000; ++i) {
    const solar::SunPosition p{rng.range(-179.9, 180.0), rng.range(0.0, 179.0)};
    const auto q = solar::decode_light(solar::encode_light(p));
    CHECK(q.azimuth_deg == doctest::Approx(p.azimuth_deg).epsilon(1e-13));
    CHECK(q.zenith_deg == doctest::Approx(p.zenith_deg).epsilon(1e-13));
  }
}

TEST_CASE("below-horizon positions are flagged for training exclusion") {
  CHECK(solar::above_horizon({0, 89.9}));
  CHECK_FALSE(solar::above_horizon({0, 90.0}));
  CHECK_FALSE(solar::above_horizon({0, 120.0}));
}

TEST_CASE("default grid carries the nine reference positions") {
  const auto& g = solar::default_positions();
  REQUIRE(g.size() == 9);
  CHECK(g[0] == solar::SunPosition{-60.0, 60.0});
  CHECK(g[8] == solar::SunPosition{95.0, 10.0});
  for (const auto& p : g) CHECK(solar::above_horizon(p));
}
