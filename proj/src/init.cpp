#include "canopy/init.hpp"

#include <stdexcept>

namespace canopy {

Fan fan_of(const Shape& shape, LayerKind kind) {
  if (kind == LayerKind::conv) {
    if (shape.size() != 4) {
      throw std::invalid_argument("fan_of: conv shape must be rank 4 [k,k,Cin,Cout], got " +
                                  shape_to_string(shape));
    }
    const std::size_t kk = shape[0] * shape[1];
    return {kk * shape[2], kk * shape[3]};
  }
  if (shape.size() != 2) {
    throw std::invalid_argument("fan_of: dense shape must be rank 2 [n,m], got " +
                                shape_to_string(shape));
  }
  return {shape[0], shape[1]};
}

InitializerKind InitializerKind::parse(std::string_view name) {
  InitializerKind k;
  if (name == "constant") k.rule = InitializerRule::constant;
  else if (name == "random_normal") k.rule = InitializerRule::random_normal;
  else if (name == "glorot_normal") k.rule = InitializerRule::glorot_normal;
  else if (name == "glorot_uniform") k.rule = InitializerRule::glorot_uniform;
  else if (name == "he_normal") k.rule = InitializerRule::he_normal;
  else if (name == "he_uniform") k.rule = InitializerRule::he_uniform;
  else if (name == "lecun_normal") k.rule = InitializerRule::lecun_normal;
  else if (name == "lecun_uniform") k.rule = InitializerRule::lecun_uniform;
  else if (name == "truncated_normal") k.rule = InitializerRule::truncated_normal;
  else {
    throw std::invalid_argument(
        "unknown initializer '" + std::string(name) +
        "' (expected one of: constant, random_normal, glorot_normal, glorot_uniform, "
        "he_normal, he_uniform, lecun_normal, lecun_uniform, truncated_normal)");
  }
  return k;
}

std::string InitializerKind::name() const {
  switch (rule) {
    case InitializerRule::constant: return "constant";
    case InitializerRule::random_normal: return "random_normal";
    case InitializerRule::glorot_normal: return "glorot_normal";
    case InitializerRule::glorot_uniform: return "glorot_uniform";
    case InitializerRule::he_normal: return "he_normal";
    case InitializerRule::he_uniform: return "he_uniform";
    case InitializerRule::lecun_normal: return "lecun_normal";
    case InitializerRule::lecun_uniform: return "lecun_uniform";
    case InitializerRule::truncated_normal: return "truncated_normal";
  }
  return "?";
}

namespace detail {

double init_sample(InitializerRule rule, double value, double mean, double stddev, double fan_in,
                   double fan_out, RngStream& rng) {
  switch (rule) {
    case InitializerRule::constant:
      return value;
    case InitializerRule::random_normal:
      return rng.normal(mean, stddev);
    case InitializerRule::glorot_normal:
      return rng.normal(0.0, std::sqrt(2.0 / (fan_in + fan_out)));
    case InitializerRule::glorot_uniform: {
      const double b = std::sqrt(6.0 / (fan_in + fan_out));
      return rng.uniform(-b, b);
    }
    case InitializerRule::he_normal:
      return rng.normal(0.0, std::sqrt(2.0 / fan_in));
    case InitializerRule::he_uniform: {
      const double b = std::sqrt(6.0 / fan_in);
      return rng.uniform(-b, b);
    }
    case InitializerRule::lecun_normal:
      return rng.normal(0.0, std::sqrt(1.0 / fan_in));
    case InitializerRule::lecun_uniform: {
      const double b = std::sqrt(3.0 / fan_in);
      return rng.uniform(-b, b);
    }
    case InitializerRule::truncated_normal:
      return rng.truncated_normal(mean, stddev);
  }
  throw std::logic_error("init_sample: unreachable");
}

}  // namespace detail

}  // namespace canopy
