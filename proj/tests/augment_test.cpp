#include <numeric>

#include "canopy/augment.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace canopy;
using canopy::testing::random_tensor;

TEST_CASE("identity configuration is a bit-exact no-op") {
  const auto img = random_tensor<float>({16, 12, 3}, 1, 0.0, 1.0);
  const auto out = augment(img, AugmentParams::identity(), RngStream(7));
  CHECK(out.values() == img.values());
}

TEST_CASE("horizontal flip at probability 1 is an involution") {
  AugmentParams p = AugmentParams::identity();
  p.hflip_prob = 1.0;
  const auto img = random_tensor<float>({10, 14, 3}, 2, 0.0, 1.0);
  const auto once = augment(img, p, RngStream(3));
  CHECK(once.values() != img.values());
  const auto twice = augment(once, p, RngStream(4));
  CHECK(twice.values() == img.values());
}

TEST_CASE("brightness 0.5 on a constant 0.8 image gives constant 0.4") {
  AugmentParams p = AugmentParams::identity();
  p.brightness_range = {0.5, 0.5};
  const TensorF img = TensorF::full({6, 6, 3}, 0.8f);
  const auto out = augment(img, p, RngStream(5));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] == doctest::Approx(0.4).epsilon(1e-6));
  }
}

TEST_CASE("outputs stay in [0,1] and shapes are preserved") {
  AugmentParams p;  // defaults: rotation 40, shifts 0.2, flip 0.5, zoom/brightness 0.8-1.2
  const auto img = random_tensor<float>({20, 24, 3}, 6, 0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto out = augment(img, p, RngStream(seed));
    CHECK(out.shape() == img.shape());
    float lo = 1.0f, hi = 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i) {
      lo = std::min(lo, out[i]);
      hi = std::max(hi, out[i]);
    }
    CHECK(lo >= 0.0f);
    CHECK(hi <= 1.0f);
  }
}

TEST_CASE("same image, params and seed give bit-identical output") {
  AugmentParams p;
  const auto img = random_tensor<float>({18, 18, 3}, 8, 0.0, 1.0);
  const auto a = augment(img, p, RngStream(42));
  const auto b = augment(img, p, RngStream(42));
  CHECK(a.values() == b.values());
  const auto c = augment(img, p, RngStream(43));
  CHECK(a.values() != c.values());
}

TEST_CASE("rotation with reflect fill keeps values inside the input range") {
  AugmentParams p = AugmentParams::identity();
  p.rotation_max = 40.0;
  TensorF img({9, 9, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.25f + 0.5f * ((i % 7) / 6.0f);
  const auto out = augment(img, p, RngStream(9));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] >= 0.25f - 1e-6f);
    CHECK(out[i] <= 0.75f + 1e-6f);
  }
}

TEST_CASE("degenerate and malformed images are rejected") {
  CHECK_THROWS_AS(augment(TensorF({4, 4}), AugmentParams::identity(), RngStream(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(augment(TensorF({4, 4, 1}), AugmentParams::identity(), RngStream(1)),
                  std::invalid_argument);
  AugmentParams bad;
  bad.width_shift_max = 0.7;
  CHECK_THROWS_AS(augment(TensorF({4, 4, 3}), bad, RngStream(1)), std::invalid_argument);
}

TEST_CASE("oversample_plan: largest-remainder apportionment") {
  SUBCASE("counts {50,100}, target 100") {
    const auto plan = oversample_plan({50, 100}, 100);
    REQUIRE(plan.size() == 2);
    CHECK(plan[0] == std::vector<std::size_t>(50, 1));  // one copy per original
    CHECK(plan[1] == std::vector<std::size_t>(100, 0));
  }
  SUBCASE("counts equal to target give an all-zero plan") {
    const auto plan = oversample_plan({100, 100}, 100);
    for (const auto& per_class : plan) {
      CHECK(std::accumulate(per_class.begin(), per_class.end(), std::size_t{0}) == 0);
    }
  }
  SUBCASE("counts {30}, target 100: 10 originals x3 and 20 x2") {
    const auto plan = oversample_plan({30}, 100);
    REQUIRE(plan[0].size() == 30);
    std::size_t threes = 0, twos = 0;
    for (std::size_t m : plan[0]) {
      if (m == 3) ++threes;
      else if (m == 2) ++twos;
      else FAIL("unexpected multiplicity");
    }
    CHECK(threes == 10);
    CHECK(twos == 20);
  }
  SUBCASE("totals hit the target exactly for arbitrary counts") {
    const std::vector<std::size_t> counts{13, 57, 99, 100, 7};
    const auto plan = oversample_plan(counts, 100);
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const std::size_t copies =
          std::accumulate(plan[c].begin(), plan[c].end(), std::size_t{0});
      CHECK(counts[c] + copies == 100);
    }
  }
  SUBCASE("target below the largest class is rejected") {
    CHECK_THROWS_AS(oversample_plan({50, 120}, 100), std::invalid_argument);
  }
}
