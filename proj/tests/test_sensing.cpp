#include <doctest.h>

#include <cmath>

#include "gentle/errors.hpp"
#include "gentle/sensing.hpp"
#include "gentle/sim.hpp"

using namespace gentle;

namespace {

SensingConfig quiet() {
  SensingConfig sc;
  sc.noise_sigma = 0.0;
  return sc;
}

Image noise_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels(i) = static_cast<float>(rng.uniform());
  return img;
}

ContactResult pressing(Side side, double force, double offset, double penetration) {
  ContactResult c;
  c[side].force = force;
  c[side].offset_mm = offset;
  c[side].penetration_mm = penetration;
  c[side].touching = force > 0.0;
  return c;
}

// Centroid of the object pixels only: brighter than the background.
Eigen::Vector2d object_centroid(const Image& img, const SensingConfig& sc) {
  return centroid(img, static_cast<float>(sc.visual_background) + 1e-4f);
}

}  // namespace

TEST_CASE("empty workspace renders the uniform background") {
  const SensingConfig sc = quiet();
  WorldConfig wc;
  WorldState w;
  w.object.position = {1e6, 1e6};
  Rng rng(1);
  const Image img = render_visual(w, Hand{}, wc, sc, rng);
  CHECK(img.width == sc.render_size);
  CHECK((img.pixels == static_cast<float>(sc.visual_background)).all());
}

TEST_CASE("object projection") {
  const SensingConfig sc = quiet();
  WorldConfig wc;
  Rng rng(2);
  WorldState w;
  w.object.position = {wc.x_range_mm.center(), wc.y_range_mm.center()};
  const Eigen::Vector2d c0 = object_centroid(render_visual(w, Hand{}, wc, sc, rng), sc);
  CHECK(std::abs(c0.x() - sc.render_size / 2.0) <= 1.0);
  CHECK(std::abs(c0.y() - sc.render_size / 2.0) <= 1.0);

  w.object.position.x() += 50.0;
  const Eigen::Vector2d c1 = object_centroid(render_visual(w, Hand{}, wc, sc, rng), sc);
  const double expected = 50.0 * sc.render_size / wc.x_range_mm.width();
  CHECK(c1.x() - c0.x() == doctest::Approx(expected).epsilon(0.02));
  CHECK(std::abs(c1.y() - c0.y()) < 0.05);
}

TEST_CASE("render_tactile") {
  const SensingConfig sc;
  Rng rng(3);
  SUBCASE("zero force shows only noise") {
    const Image img = render_tactile(ContactResult{}, Side::left, sc, rng);
    CHECK(img.pixels.maxCoeff() < 0.05f);
  }
  SUBCASE("saturating force peaks at one") {
    const SensingConfig q = quiet();
    const Image img = render_tactile(pressing(Side::right, q.force_saturation_n, 0.0, 2.0), Side::right, q, rng);
    CHECK(img.pixels.maxCoeff() == doctest::Approx(1.0).epsilon(0.01));
    const Image noisy = render_tactile(pressing(Side::right, sc.force_saturation_n, 0.0, 2.0), Side::right, sc, rng);
    CHECK(noisy.pixels.maxCoeff() >= 1.0f - 2.0f * float(sc.noise_sigma));
  }
  SUBCASE("contact offset moves the blob") {
    const SensingConfig q = quiet();
    const Eigen::Vector2d a = centroid(render_tactile(pressing(Side::left, 4.0, 0.0, 3.0), Side::left, q, rng));
    const Eigen::Vector2d b = centroid(render_tactile(pressing(Side::left, 4.0, 5.0, 3.0), Side::left, q, rng));
    CHECK(b.x() - a.x() == doctest::Approx(5.0 * q.tactile_px_per_mm).epsilon(1e-3));
    CHECK(b.y() == doctest::Approx(a.y()));
  }
  SUBCASE("the other finger's contact is invisible") {
    const SensingConfig q = quiet();
    const Image img = render_tactile(pressing(Side::left, 4.0, 0.0, 3.0), Side::right, q, rng);
    CHECK(img.pixels.maxCoeff() == 0.0f);
  }
}

TEST_CASE("background subtraction") {
  Rng rng(4);
  const Image pre = noise_image(56, 56, rng);
  CHECK((background_subtract(pre, pre).pixels == 0.5f).all());

  Image shifted = pre;
  shifted.pixels = (pre.pixels * 0.5f).eval();
  Image up = shifted;
  up.pixels += 0.4f;
  CHECK((background_subtract(up, shifted).pixels - 0.7f).abs().maxCoeff() < 1e-6f);

  const Image post = noise_image(56, 56, rng);
  const Image diff = background_subtract(post, pre);
  double worst = 0.0;
  for (int y = 0; y < 56; ++y)
    for (int x = 0; x < 56; ++x)
      worst = std::max(worst, std::abs(diff.at(x, y) - 0.5 * (double(post.at(x, y)) - pre.at(x, y) + 1.0)));
  CHECK(worst < 1e-6);
  CHECK_THROWS_AS(background_subtract(Image(4, 4), Image(4, 5)), DomainError);
}

TEST_CASE("tactile differential") {
  Rng rng(5);
  const Image a = noise_image(56, 56, rng);
  CHECK(tactile_differential(a, a) == 0.0);
  Image low(56, 56, 1, 0.3f), high(56, 56, 1, 0.4f);
  CHECK(tactile_differential(high, low) == doctest::Approx(313.6).epsilon(1e-5));

  const SensingConfig q = quiet();
  const Image ref = render_tactile_reference(q, rng);
  double last = 0.0;
  for (double force = 0.0; force <= 10.0; force += 0.5) {
    const double d = tactile_differential(render_tactile(pressing(Side::left, force, 1.0, 2.0), Side::left, q, rng), ref);
    CHECK(d >= last);
    last = d;
  }
}

TEST_CASE("property: tactile differential is a pseudometric") {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const Image a = noise_image(20, 20, rng), b = noise_image(20, 20, rng), c = noise_image(20, 20, rng);
    CHECK(tactile_differential(a, b) == doctest::Approx(tactile_differential(b, a)));
    CHECK(tactile_differential(a, c) <= tactile_differential(a, b) + tactile_differential(b, c) + 1e-4);
    CHECK(tactile_differential(a, a) == 0.0);
  }
}

TEST_CASE("property: tactile intensity is nondecreasing in force at every pixel") {
  const SensingConfig q = quiet();
  Rng rng(7);
  Image last = render_tactile(pressing(Side::right, 0.0, -2.0, 1.5), Side::right, q, rng);
  for (double force = 0.25; force <= 12.0; force += 0.25) {
    const Image img = render_tactile(pressing(Side::right, force, -2.0, 1.5), Side::right, q, rng);
    CHECK((img.pixels >= last.pixels).all());
    last = img;
  }
}

TEST_CASE("resize and crop") {
  Rng rng(8);
  const Image src = noise_image(64, 64, rng);
  CHECK(crop(src, {0, 0}, 64, 64) == src);
  CHECK(random_crop(src, rng, 64, 64) == src);
  CHECK_THROWS_AS(random_crop(src, rng, 65, 64), DomainError);
  CHECK_THROWS_AS(crop(src, {9, 0}, 56, 56), DomainError);

  const Image flat(64, 64, 1, 0.37f);
  CHECK((resize(flat, 31, 47).pixels - 0.37f).abs().maxCoeff() < 1e-6f);

  Image ramp(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) ramp.at(x, y) = static_cast<float>(0.01 * x + 0.004 * y);
  const Image r = resize(ramp, 41, 23);
  double worst = 0.0;
  for (int y = 0; y < 23; ++y)
    for (int x = 0; x < 41; ++x) {
      const double sx = x * 63.0 / 40.0, sy = y * 63.0 / 22.0;
      worst = std::max(worst, std::abs(r.at(x, y) - (0.01 * sx + 0.004 * sy)));
    }
  CHECK(worst < 1e-6);

  const Image c = crop(src, {3, 5}, 56, 56);
  CHECK(c.at(0, 0) == src.at(3, 5));
  CHECK(c.at(55, 55) == src.at(58, 60));
}

TEST_CASE("random crop offsets are uniform over the valid range") {
  Rng rng(9);
  const Image src(64, 64);
  std::array<int, 9> hist{};
  for (int i = 0; i < 9000; ++i) {
    const CropOffset at = random_crop_offset(rng, src, 56, 56);
    REQUIRE(at.x >= 0);
    REQUIRE(at.x <= 8);
    ++hist[at.x];
  }
  for (int h : hist) CHECK(std::abs(h - 1000) < 150);
}

TEST_CASE("property: rendered pixels are in range and deterministic") {
  RunConfig cfg = preset(Scale::desk);
  const Simulator sim(cfg);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a(seed), b(seed);
    const auto ga = sim.initial_grasp(a), gb = sim.initial_grasp(b);
    CHECK(ga.observation == gb.observation);
    CHECK(ga.observation.consistent());
    for (const Image* img : {&ga.observation.visual, &ga.observation.tactile_left, &ga.observation.tactile_right,
                             &ga.observation.tactile_left_ref, &ga.observation.tactile_right_ref}) {
      CHECK(img->pixels.allFinite());
      CHECK(img->pixels.minCoeff() >= 0.0f);
      CHECK(img->pixels.maxCoeff() <= 1.0f);
    }
  }
}
