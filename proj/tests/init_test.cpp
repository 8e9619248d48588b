#include <cmath>

#include "canopy/init.hpp"
#include "doctest.h"

using namespace canopy;

TEST_CASE("fan_of definitions") {
  const Fan conv = fan_of({3, 3, 3, 32}, LayerKind::conv);
  CHECK(conv.fan_in == 27);
  CHECK(conv.fan_out == 288);

  const Fan dense = fan_of({128, 6}, LayerKind::dense);
  CHECK(dense.fan_in == 128);
  CHECK(dense.fan_out == 6);

  const Fan unit = fan_of({1, 1, 1, 1}, LayerKind::conv);
  CHECK(unit.fan_in == 1);
  CHECK(unit.fan_out == 1);

  CHECK_THROWS_AS(fan_of({3, 3, 3}, LayerKind::conv), std::invalid_argument);
  CHECK_THROWS_AS(fan_of({3, 3, 3}, LayerKind::dense), std::invalid_argument);
}

TEST_CASE("constant initializer fills the value") {
  InitializerKind k = InitializerKind::parse("constant");
  k.value = 0.5;
  const auto t = initialize<double>(k, {4}, RngStream(1));
  CHECK(t.values() == std::vector<double>{0.5, 0.5, 0.5, 0.5});
}

TEST_CASE("same seed, kind and shape give a bit-identical tensor") {
  const InitializerKind k = InitializerKind::parse("he_normal");
  const auto a = initialize<float>(k, {3, 3, 3, 32}, RngStream(42));
  const auto b = initialize<float>(k, {3, 3, 3, 32}, RngStream(42));
  CHECK(a.values() == b.values());
  const auto c = initialize<float>(k, {3, 3, 3, 32}, RngStream(43));
  CHECK(a.values() != c.values());
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  double max_abs = 0.0;
};

Moments sample_moments(const InitializerKind& kind, const Shape& shape, std::uint64_t seed,
                       std::size_t min_draws = 100000) {
  Moments m;
  double sum = 0.0, sq_sum = 0.0;
  std::size_t n = 0;
  std::uint64_t tensor_index = 0;
  while (n < min_draws) {
    const auto t = initialize<double>(kind, shape, RngStream(seed).substream(tensor_index++));
    for (std::size_t i = 0; i < t.size(); ++i) {
      sum += t[i];
      sq_sum += t[i] * t[i];
      m.max_abs = std::max(m.max_abs, std::fabs(t[i]));
      ++n;
    }
  }
  m.mean = sum / static_cast<double>(n);
  m.stddev = std::sqrt(sq_sum / static_cast<double>(n) - m.mean * m.mean);
  return m;
}

}  // namespace

TEST_CASE("he_normal empirical stddev matches sqrt(2/fan_in) on a conv kernel") {
  const auto m = sample_moments(InitializerKind::parse("he_normal"), {3, 3, 3, 32}, 7);
  const double target = std::sqrt(2.0 / 27.0);  // 0.272166
  CHECK(std::fabs(m.stddev - target) / target < 0.05);
}

TEST_CASE("glorot_uniform bound and mean on a conv kernel") {
  const auto m = sample_moments(InitializerKind::parse("glorot_uniform"), {3, 3, 3, 32}, 8);
  const double bound = std::sqrt(6.0 / 315.0);  // 0.138013
  CHECK(m.max_abs < bound);
  CHECK(std::fabs(m.mean) < 0.003);
}

TEST_CASE("every variance-scaled rule matches its closed-form variance within 5%") {
  const Shape conv_shape{3, 3, 3, 32};
  const double fan_in = 27.0, fan_out = 288.0;
  const struct {
    const char* name;
    double target_var;
  } cases[] = {
      {"glorot_normal", 2.0 / (fan_in + fan_out)},
      {"glorot_uniform", 2.0 / (fan_in + fan_out)},  // var of U(+-sqrt(6/s)) = 2/s
      {"he_normal", 2.0 / fan_in},
      {"he_uniform", 2.0 / fan_in},
      {"lecun_normal", 1.0 / fan_in},
      {"lecun_uniform", 1.0 / fan_in},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto m = sample_moments(InitializerKind::parse(c.name), conv_shape, 9);
    const double var = m.stddev * m.stddev;
    CHECK(std::fabs(var - c.target_var) / c.target_var < 0.05);
  }
}

TEST_CASE("uniform-family samples stay strictly inside their bounds") {
  const struct {
    const char* name;
    double bound;
  } cases[] = {
      {"glorot_uniform", std::sqrt(6.0 / 315.0)},
      {"he_uniform", std::sqrt(6.0 / 27.0)},
      {"lecun_uniform", std::sqrt(3.0 / 27.0)},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto m = sample_moments(InitializerKind::parse(c.name), {3, 3, 3, 32}, 10);
    CHECK(m.max_abs < c.bound);
  }
}

TEST_CASE("truncated_normal rejects beyond two standard deviations") {
  InitializerKind k = InitializerKind::parse("truncated_normal");
  k.mean = 0.1;
  k.stddev = 0.05;
  const auto t = initialize<double>(k, {100000}, RngStream(11));
  double max_dev = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    max_dev = std::max(max_dev, std::fabs(t[i] - 0.1));
  }
  CHECK(max_dev <= 2.0 * 0.05 + 1e-12);
}

TEST_CASE("random_normal default is mean 0, stddev 0.05") {
  const auto m = sample_moments(InitializerKind::parse("random_normal"), {100000}, 12);
  CHECK(std::fabs(m.mean) < 0.001);
  CHECK(std::fabs(m.stddev - 0.05) / 0.05 < 0.05);
}

TEST_CASE("initializer names parse exactly as the results tables spell them") {
  for (const char* name :
       {"constant", "random_normal", "glorot_normal", "glorot_uniform", "he_normal", "he_uniform",
        "lecun_normal", "lecun_uniform", "truncated_normal"}) {
    CHECK(InitializerKind::parse(name).name() == name);
  }
  CHECK_THROWS_AS(InitializerKind::parse("orthogonal"), std::invalid_argument);
}
