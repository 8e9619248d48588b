#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "canopy/rng.hpp"
#include "canopy/tensor.hpp"

namespace canopy {

enum class InitializerRule {
  constant,
  random_normal,
  glorot_normal,
  glorot_uniform,
  he_normal,
  he_uniform,
  lecun_normal,
  lecun_uniform,
  truncated_normal,
};

/// Kernel initializer selection. `value` applies to constant; `mean`/`stddev`
/// apply to random_normal and truncated_normal.
struct InitializerKind {
  InitializerRule rule = InitializerRule::glorot_uniform;
  double value = 0.0;
  double mean = 0.0;
  double stddev = 0.05;

  /// Parses the config naming used throughout results tables
  /// ("he_normal", "lecun_uniform", "truncated_normal", ...).
  static InitializerKind parse(std::string_view name);
  std::string name() const;

  bool operator==(const InitializerKind&) const = default;
};

enum class LayerKind { conv, dense };

struct Fan {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

/// conv [k,k,Cin,Cout]: fan_in = k*k*Cin, fan_out = k*k*Cout.
/// dense [n,m]: fan_in = n, fan_out = m.
Fan fan_of(const Shape& shape, LayerKind kind);

namespace detail {
double init_sample(InitializerRule rule, double value, double mean, double stddev, double fan_in,
                   double fan_out, RngStream& rng);
}

/// Fills a tensor according to the initializer's sampling rule. Fan geometry
/// is inferred from rank: rank 4 is a conv kernel, rank 2 a dense matrix.
/// Same (kind, shape, stream) always yields a bit-identical tensor.
template <typename T>
Tensor<T> initialize(const InitializerKind& kind, Shape shape, RngStream rng) {
  Fan fan{1, 1};
  if (kind.rule != InitializerRule::constant && kind.rule != InitializerRule::random_normal &&
      kind.rule != InitializerRule::truncated_normal) {
    fan = fan_of(shape, shape.size() == 4 ? LayerKind::conv : LayerKind::dense);
  }
  Tensor<T> out(std::move(shape));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(detail::init_sample(kind.rule, kind.value, kind.mean, kind.stddev,
                                                static_cast<double>(fan.fan_in),
                                                static_cast<double>(fan.fan_out), rng));
  }
  return out;
}

}  // namespace canopy
