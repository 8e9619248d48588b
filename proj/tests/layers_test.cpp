#include <cmath>

#include "canopy/gradcheck.hpp"
#include "canopy/layers.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace canopy;
using canopy::testing::conv2d_loopnest;
using canopy::testing::dot;
using canopy::testing::max_rel_diff;
using canopy::testing::random_tensor;

TEST_CASE("conv2d: 1x1 kernel is a scalar multiply") {
  TensorD in({1, 1, 1}, {5.0});
  TensorD k({1, 1, 1, 1}, {2.0});
  TensorD b({1}, {0.0});
  const auto out = conv2d_forward(in, k, b);
  CHECK(out.shape() == Shape{1, 1, 1});
  CHECK(out[0] == doctest::Approx(10.0));
}

TEST_CASE("conv2d: zero input passes only the bias") {
  TensorD in({3, 3, 1});
  const auto k = random_tensor<double>({3, 3, 1, 2}, 11);
  TensorD b({2}, {0.25, -1.5});
  const auto out = conv2d_forward(in, k, b);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      CHECK(out(y, x, 0) == doctest::Approx(0.25));
      CHECK(out(y, x, 1) == doctest::Approx(-1.5));
    }
  }
}

TEST_CASE("conv2d: matches the six-nested-loop oracle to 1e-12 relative") {
  const auto in = random_tensor<double>({5, 5, 2}, 21);
  const auto k = random_tensor<double>({3, 3, 2, 4}, 22);
  const auto b = random_tensor<double>({4}, 23);
  const auto fast = conv2d_forward(in, k, b);
  const auto oracle = conv2d_loopnest(in, k, b);
  CHECK(fast.shape() == oracle.shape());
  CHECK(max_rel_diff(fast, oracle) < 1e-12);
}

TEST_CASE("conv2d: 1x1 identity kernel with zero bias is the identity map") {
  const auto in = random_tensor<double>({4, 6, 3}, 31);
  TensorD k({1, 1, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) k(0, 0, c, c) = 1.0;
  TensorD b({3});
  const auto out = conv2d_forward(in, k, b);
  CHECK(out.values() == in.values());
}

TEST_CASE("conv2d: channel mismatch is rejected with a shape diagnostic") {
  TensorD in({4, 4, 2});
  TensorD k({3, 3, 3, 4});
  TensorD b({4});
  CHECK_THROWS_WITH_AS(conv2d_forward(in, k, b),
                       doctest::Contains("input channels 2 do not match kernel Cin 3"),
                       std::invalid_argument);
  CHECK_THROWS_AS(conv2d_forward(in, TensorD({2, 2, 2, 4}), TensorD({4})),
                  std::invalid_argument);  // even kernel
}

TEST_CASE("conv2d: gradients match finite differences") {
  const auto x = random_tensor<double>({5, 5, 2}, 41);
  const auto k = random_tensor<double>({3, 3, 2, 4}, 42);
  const auto b = random_tensor<double>({4}, 43);
  const auto upstream = random_tensor<double>({5, 5, 4}, 44);
  const auto grads = conv2d_backward(x, k, b, upstream);

  SUBCASE("d_input") {
    const auto rep = grad_check(
        [&](const TensorD& probe) { return dot(conv2d_forward(probe, k, b), upstream); }, x,
        grads.d_input, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
  }
  SUBCASE("d_kernels") {
    const auto rep = grad_check(
        [&](const TensorD& probe) { return dot(conv2d_forward(x, probe, b), upstream); }, k,
        grads.d_kernels, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
  }
  SUBCASE("d_bias") {
    const auto rep = grad_check(
        [&](const TensorD& probe) { return dot(conv2d_forward(x, k, probe), upstream); }, b,
        grads.d_bias, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
  }
}

TEST_CASE("relu: forward and subgradient at zero") {
  TensorD in({3}, {-1.0, 0.0, 2.0});
  const auto out = relu_forward(in);
  CHECK(out.values() == std::vector<double>{0.0, 0.0, 2.0});
  TensorD ones({3}, {1.0, 1.0, 1.0});
  const auto back = relu_backward(in, ones);
  CHECK(back.values() == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("relu: gradient matches finite differences away from the kink") {
  auto x = random_tensor<double>({40}, 51);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += x[i] >= 0 ? 0.2 : -0.2;
  const auto upstream = random_tensor<double>({40}, 52);
  const auto rep = grad_check(
      [&](const TensorD& probe) { return dot(relu_forward(probe), upstream); }, x,
      relu_backward(x, upstream), 1e-5);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("maxpool2d: window max and floor semantics") {
  TensorD in({2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
  const auto r = maxpool2d_forward(in);
  CHECK(r.output.shape() == Shape{1, 1, 1});
  CHECK(r.output[0] == 4.0);

  const auto in5 = random_tensor<double>({5, 5, 1}, 61);
  const auto r5 = maxpool2d_forward(in5);
  CHECK(r5.output.shape() == Shape{2, 2, 1});

  CHECK_THROWS_AS(maxpool2d_forward(TensorD({1, 4, 1})), std::invalid_argument);
}

TEST_CASE("maxpool2d: outputs dominate their window and occur in it") {
  const auto in = random_tensor<double>({6, 8, 3}, 62);
  const auto r = maxpool2d_forward(in);
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double m = r.output(y, x, c);
        bool found = false;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const double v = in(2 * y + dy, 2 * x + dx, c);
            CHECK(m >= v);
            found = found || (m == v);
          }
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("maxpool2d: backward matches finite differences") {
  const auto x = random_tensor<double>({6, 6, 3}, 63);
  const auto upstream = random_tensor<double>({3, 3, 3}, 64);
  const auto r = maxpool2d_forward(x);
  const auto rep = grad_check(
      [&](const TensorD& probe) { return dot(maxpool2d_forward(probe).output, upstream); }, x,
      maxpool2d_backward(r.cache, upstream), 1e-5);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("dense: identity and hand arithmetic") {
  TensorD eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
  TensorD x({2}, {3.0, -4.0});
  CHECK(dense_forward(x, eye, TensorD({2})).values() == x.values());

  TensorD b({2}, {3.0, 4.0});
  TensorD in({2}, {1.0, 2.0});
  const auto out = dense_forward(in, eye, b);
  CHECK(out.values() == std::vector<double>{4.0, 6.0});

  CHECK_THROWS_WITH_AS(dense_forward(TensorD({3}), eye, b),
                       doctest::Contains("input length 3 does not match weight rows 2"),
                       std::invalid_argument);
}

TEST_CASE("dense: gradients on a random 8->4 layer match finite differences") {
  const auto x = random_tensor<double>({8}, 71);
  const auto w = random_tensor<double>({8, 4}, 72);
  const auto b = random_tensor<double>({4}, 73);
  const auto upstream = random_tensor<double>({4}, 74);
  const auto grads = dense_backward(x, w, upstream);

  auto check = [&](const TensorD& at, const TensorD& analytic, auto&& f) {
    const auto rep = grad_check(f, at, analytic, 1e-5);
    CHECK(rep.max_rel_err < 1e-4);
  };
  check(x, grads.d_input,
        [&](const TensorD& p) { return dot(dense_forward(p, w, b), upstream); });
  check(w, grads.d_weights,
        [&](const TensorD& p) { return dot(dense_forward(x, p, b), upstream); });
  check(b, grads.d_bias,
        [&](const TensorD& p) { return dot(dense_forward(x, w, p), upstream); });
}

TEST_CASE("dropout: degenerate rate and inference are identities") {
  const auto x = random_tensor<float>({64}, 81);
  RngStream rng(7);
  const auto r0 = dropout_forward(x, 0.0, rng, /*training=*/true);
  CHECK(r0.output.values() == x.values());  // bit-identical
  const auto r1 = dropout_forward(x, 0.2, rng, /*training=*/false);
  CHECK(r1.output.values() == x.values());
  CHECK_THROWS_AS(dropout_forward(x, 1.0, rng, true), std::invalid_argument);
}

TEST_CASE("dropout: survivor fraction and mean preservation at rate 0.2") {
  const std::size_t n = 100000;
  TensorF x = TensorF::full({n}, 1.0f);
  RngStream rng(12345);
  const auto r = dropout_forward(x, 0.2, rng, true);
  std::size_t survivors = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    survivors += r.keep[i];
    sum += r.output[i];
  }
  const double survivor_fraction = static_cast<double>(survivors) / static_cast<double>(n);
  CHECK(survivor_fraction == doctest::Approx(0.8).epsilon(0.0125));  // 0.8 +- 0.01
  CHECK(std::fabs(survivor_fraction - 0.8) < 0.01);
  const double mean_out = sum / static_cast<double>(n);
  CHECK(std::fabs(mean_out - 1.0) < 0.02);  // E[out] within 2% of E[in]
}

TEST_CASE("dropout: backward applies the identical mask and scale") {
  const auto x = random_tensor<float>({32}, 91);
  RngStream rng(5);
  const auto r = dropout_forward(x, 0.3, rng, true);
  TensorF ones = TensorF::full({32}, 1.0f);
  const auto back = dropout_backward(r, ones);
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(back[i] == (r.keep[i] ? r.scale : 0.0f));
  }
}

TEST_CASE("softmax_cross_entropy: uniform logits give ln K") {
  TensorD logits({6});
  const auto r = softmax_cross_entropy(logits, 2);
  CHECK(r.loss == doctest::Approx(std::log(6.0)).epsilon(1e-15));
  CHECK(r.loss >= 0.0);
}

TEST_CASE("softmax_cross_entropy: confident correct prediction drives loss to 0") {
  TensorD logits({4}, {40.0, 0.0, 0.0, 0.0});
  const auto r = softmax_cross_entropy(logits, 0);
  CHECK(r.loss < 1e-12);
  CHECK(r.loss >= 0.0);
}

TEST_CASE("softmax_cross_entropy: errors and weighting") {
  TensorD logits({3}, {0.1, 0.2, 0.3});
  CHECK_THROWS_AS(softmax_cross_entropy(logits, 3), std::invalid_argument);
  CHECK_THROWS_AS(softmax_cross_entropy(TensorD({1}), 0), std::invalid_argument);

  TensorD w({3}, {1.0, 2.5, 1.0});
  const auto unweighted = softmax_cross_entropy(logits, 1);
  const auto weighted = softmax_cross_entropy(logits, 1, w);
  CHECK(weighted.loss == doctest::Approx(2.5 * unweighted.loss));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(weighted.d_logits[i] == doctest::Approx(2.5 * unweighted.d_logits[i]));
  }
}

TEST_CASE("softmax_cross_entropy: gradient matches finite differences") {
  const auto logits = random_tensor<double>({6}, 101, -2.0, 2.0);
  TensorD w({6}, {0.5, 1.5, 1.0, 2.0, 0.75, 1.25});
  const auto r = softmax_cross_entropy(logits, 4, w);
  const auto rep = grad_check(
      [&](const TensorD& probe) {
        return softmax_cross_entropy(probe, std::size_t{4}, std::optional<TensorD>(w)).loss;
      },
      logits, r.d_logits, 1e-5);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("grad_check: epsilon bounds enforced") {
  TensorD x({2}, {1.0, 2.0});
  TensorD g({2}, {1.0, 1.0});
  auto f = [](const TensorD& t) { return t[0] + t[1]; };
  CHECK_THROWS_AS(grad_check(f, x, g, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(grad_check(f, x, g, 1e-2), std::invalid_argument);
  CHECK(grad_check(f, x, g, 1e-5).max_rel_err < 1e-9);
}

TEST_CASE("forward ops are deterministic given identical inputs") {
  const auto x = random_tensor<double>({7, 7, 2}, 111);
  const auto k = random_tensor<double>({3, 3, 2, 3}, 112);
  const auto b = random_tensor<double>({3}, 113);
  CHECK(conv2d_forward(x, k, b).values() == conv2d_forward(x, k, b).values());
  RngStream r1(99), r2(99);
  const auto d1 = dropout_forward(x, 0.4, r1, true);
  const auto d2 = dropout_forward(x, 0.4, r2, true);
  CHECK(d1.output.values() == d2.output.values());
}
