#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "canopy/init.hpp"
#include "canopy/layers.hpp"
#include "canopy/rng.hpp"
#include "canopy/tensor.hpp"

namespace canopy {

/// Declarative description of one network instance:
/// N blocks of [conv -> relu, conv -> relu, maxpool, dropout] followed by
/// flatten -> dense -> relu -> dropout -> dense(K).
struct ModelSpec {
  int n_blocks = 1;  // in {1..6}
  int kernel_size = 3;
  std::vector<std::size_t> filters;  // per block; empty selects 32*2^(b-1) capped at 256
  std::size_t fc_width = 128;
  double dropout_rate = 0.0;
  InitializerKind initializer = {InitializerRule::he_uniform};
  std::size_t input_h = 200;
  std::size_t input_w = 200;
  std::size_t n_classes = 6;

  void validate() const;
  std::vector<std::size_t> effective_filters() const;

  /// Spatial side lengths after each pooling, starting with the input size
  /// (e.g. 200 -> 100 -> 50 -> 25 -> 12 -> 6 -> 3 for six blocks).
  std::vector<std::pair<std::size_t, std::size_t>> spatial_trace() const;

  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);

  bool operator==(const ModelSpec&) const = default;
};

std::size_t count_parameters(const ModelSpec& spec);

/// Balanced per-class loss multipliers: w[c] = total / (K * count[c]).
TensorD compute_class_weights(const std::vector<std::size_t>& class_counts);

template <typename T>
struct ParamEntry {
  std::string id;
  Tensor<T> weights;
  Tensor<T> bias;

  bool operator==(const ParamEntry&) const = default;
};

template <typename T>
struct ModelParamsT {
  std::vector<ParamEntry<T>> entries;

  std::vector<Tensor<T>*> tensors() {
    std::vector<Tensor<T>*> out;
    out.reserve(entries.size() * 2);
    for (auto& e : entries) {
      out.push_back(&e.weights);
      out.push_back(&e.bias);
    }
    return out;
  }

  std::vector<Shape> shapes() const {
    std::vector<Shape> out;
    out.reserve(entries.size() * 2);
    for (const auto& e : entries) {
      out.push_back(e.weights.shape());
      out.push_back(e.bias.shape());
    }
    return out;
  }

  template <typename U>
  ModelParamsT<U> cast() const {
    ModelParamsT<U> out;
    out.entries.reserve(entries.size());
    for (const auto& e : entries) {
      out.entries.push_back({e.id, e.weights.template cast<U>(), e.bias.template cast<U>()});
    }
    return out;
  }

  bool operator==(const ModelParamsT&) const = default;
};

using ModelParamsF = ModelParamsT<float>;
using ModelParamsD = ModelParamsT<double>;

namespace detail {
// layer id list in parameter order: block{b}_conv{1,2}, fc_hidden, fc_output
std::vector<std::string> layer_ids(const ModelSpec& spec);
}  // namespace detail

/// Initializes every weight tensor from the spec's initializer; biases are
/// zero. Each tensor draws from a substream keyed by its layer index, so
/// adding blocks never perturbs earlier layers' draws.
template <typename T>
ModelParamsT<T> build_model(const ModelSpec& spec, const RngStream& rng) {
  spec.validate();
  const auto filters = spec.effective_filters();
  const std::size_t k = static_cast<std::size_t>(spec.kernel_size);
  ModelParamsT<T> params;
  std::uint64_t layer_index = 0;
  std::size_t cin = 3;
  for (int b = 0; b < spec.n_blocks; ++b) {
    const std::size_t cout = filters[static_cast<std::size_t>(b)];
    for (int c = 0; c < 2; ++c) {
      ParamEntry<T> e;
      e.id = "block" + std::to_string(b + 1) + "_conv" + std::to_string(c + 1);
      e.weights = initialize<T>(spec.initializer, {k, k, cin, cout},
                                rng.substream("init", layer_index++));
      e.bias = Tensor<T>({cout});
      params.entries.push_back(std::move(e));
      cin = cout;
    }
  }
  const auto trace = spec.spatial_trace();
  const std::size_t flat = trace.back().first * trace.back().second * filters.back();
  {
    ParamEntry<T> e;
    e.id = "fc_hidden";
    e.weights = initialize<T>(spec.initializer, {flat, spec.fc_width},
                              rng.substream("init", layer_index++));
    e.bias = Tensor<T>({spec.fc_width});
    params.entries.push_back(std::move(e));
  }
  {
    ParamEntry<T> e;
    e.id = "fc_output";
    e.weights = initialize<T>(spec.initializer, {spec.fc_width, spec.n_classes},
                              rng.substream("init", layer_index++));
    e.bias = Tensor<T>({spec.n_classes});
    params.entries.push_back(std::move(e));
  }
  return params;
}

template <typename T>
struct ModelTape {
  std::vector<Tensor<T>> conv_inputs;          // one per conv layer
  std::vector<Tensor<T>> relu_inputs;          // conv relus then the fc relu
  std::vector<MaxPoolCache> pools;             // one per block
  std::vector<std::vector<std::uint8_t>> drop_keep;  // one per dropout site (empty = identity)
  std::vector<T> drop_scale;
  Shape block_out_shape;      // shape entering flatten
  Tensor<T> fc_input;         // flattened block output
  Tensor<T> fc_hidden_act;    // input to the output layer
  Tensor<T> logits;
};

template <typename T>
void check_model_input(const ModelSpec& spec, const Tensor<T>& image) {
  if (image.rank() != 3 || image.dim(2) != 3 || image.dim(0) != spec.input_h ||
      image.dim(1) != spec.input_w) {
    throw std::invalid_argument("model: expected image shaped [" + std::to_string(spec.input_h) +
                                "," + std::to_string(spec.input_w) + ",3], got " +
                                shape_to_string(image.shape()));
  }
}

/// Single-image forward. With training=true, dropout masks are drawn from
/// per-layer substreams of `rng` and recorded on the tape for backward.
template <typename T>
Tensor<T> model_forward_tape(const ModelSpec& spec, const ModelParamsT<T>& params,
                             const Tensor<T>& image, bool training, const RngStream& rng,
                             ModelTape<T>* tape) {
  spec.validate();
  check_model_input(spec, image);
  const bool with_dropout = spec.dropout_rate > 0.0;
  std::uint64_t dropout_site = 0;
  Tensor<T> x = image;
  std::size_t conv_idx = 0;
  for (int b = 0; b < spec.n_blocks; ++b) {
    for (int c = 0; c < 2; ++c) {
      const ParamEntry<T>& e = params.entries[conv_idx++];
      if (tape) tape->conv_inputs.push_back(x);
      x = conv2d_forward(x, e.weights, e.bias);
      if (tape) tape->relu_inputs.push_back(x);
      x = relu_forward(x);
    }
    auto pooled = maxpool2d_forward(x);
    if (tape) tape->pools.push_back(std::move(pooled.cache));
    x = std::move(pooled.output);
    if (with_dropout) {
      RngStream site_rng = rng.substream("dropout", dropout_site++);
      auto dropped = dropout_forward(x, spec.dropout_rate, site_rng, training);
      if (tape) {
        tape->drop_keep.push_back(std::move(dropped.keep));
        tape->drop_scale.push_back(dropped.scale);
      }
      x = std::move(dropped.output);
    }
  }
  if (tape) tape->block_out_shape = x.shape();
  Tensor<T> flat = x.flattened();
  if (tape) tape->fc_input = flat;
  const ParamEntry<T>& fc1 = params.entries[conv_idx];
  const ParamEntry<T>& fc2 = params.entries[conv_idx + 1];
  Tensor<T> hidden = dense_forward(flat, fc1.weights, fc1.bias);
  if (tape) tape->relu_inputs.push_back(hidden);
  hidden = relu_forward(hidden);
  if (with_dropout) {
    RngStream site_rng = rng.substream("dropout", dropout_site++);
    auto dropped = dropout_forward(hidden, spec.dropout_rate, site_rng, training);
    if (tape) {
      tape->drop_keep.push_back(std::move(dropped.keep));
      tape->drop_scale.push_back(dropped.scale);
    }
    hidden = std::move(dropped.output);
  }
  if (tape) tape->fc_hidden_act = hidden;
  Tensor<T> logits = dense_forward(hidden, fc2.weights, fc2.bias);
  if (tape) tape->logits = logits;
  return logits;
}

template <typename T>
Tensor<T> model_forward(const ModelSpec& spec, const ModelParamsT<T>& params,
                        const Tensor<T>& image, bool training = false,
                        const RngStream& rng = RngStream(0)) {
  return model_forward_tape(spec, params, image, training, rng,
                            static_cast<ModelTape<T>*>(nullptr));
}

/// Batch forward: images each [H,W,3], logits [batch,K]. Each batch member
/// uses its own dropout substream keyed by position.
template <typename T>
Tensor<T> model_forward_batch(const ModelSpec& spec, const ModelParamsT<T>& params,
                              const std::vector<Tensor<T>>& images, bool training = false,
                              const RngStream& rng = RngStream(0)) {
  Tensor<T> logits({images.size(), spec.n_classes});
  for (std::size_t i = 0; i < images.size(); ++i) {
    Tensor<T> one = model_forward_tape(spec, params, images[i], training,
                                       rng.substream("batch", i),
                                       static_cast<ModelTape<T>*>(nullptr));
    for (std::size_t c = 0; c < spec.n_classes; ++c) logits(i, c) = one[c];
  }
  return logits;
}

template <typename T>
Tensor<T> dropout_backward_mask(const std::vector<std::uint8_t>& keep, T scale,
                                const Tensor<T>& upstream) {
  if (keep.empty()) return upstream;
  Tensor<T> out(upstream.shape());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    out[i] = keep[i] ? upstream[i] * scale : T(0);
  }
  return out;
}

/// Gradients aligned with ModelParamsT::tensors() order (weights, bias per
/// entry). The tape must come from a matching model_forward_tape call.
template <typename T>
std::vector<Tensor<T>> model_backward(const ModelSpec& spec, const ModelParamsT<T>& params,
                                      const ModelTape<T>& tape, const Tensor<T>& d_logits) {
  const bool with_dropout = spec.dropout_rate > 0.0;
  const std::size_t n_conv = static_cast<std::size_t>(spec.n_blocks) * 2;
  std::vector<Tensor<T>> grads(params.entries.size() * 2);

  const ParamEntry<T>& fc1 = params.entries[n_conv];
  const ParamEntry<T>& fc2 = params.entries[n_conv + 1];

  DenseGrads<T> out_grads = dense_backward(tape.fc_hidden_act, fc2.weights, d_logits);
  grads[(n_conv + 1) * 2] = std::move(out_grads.d_weights);
  grads[(n_conv + 1) * 2 + 1] = std::move(out_grads.d_bias);
  Tensor<T> d_hidden = std::move(out_grads.d_input);

  if (with_dropout) {
    const auto& keep = tape.drop_keep.back();
    d_hidden = dropout_backward_mask(keep, tape.drop_scale.back(), d_hidden);
  }
  d_hidden = relu_backward(tape.relu_inputs.back(), d_hidden);

  DenseGrads<T> hidden_grads = dense_backward(tape.fc_input, fc1.weights, d_hidden);
  grads[n_conv * 2] = std::move(hidden_grads.d_weights);
  grads[n_conv * 2 + 1] = std::move(hidden_grads.d_bias);

  Tensor<T> d_x(tape.block_out_shape, std::move(hidden_grads.d_input.values()));
  for (int b = spec.n_blocks - 1; b >= 0; --b) {
    if (with_dropout) {
      d_x = dropout_backward_mask(tape.drop_keep[static_cast<std::size_t>(b)],
                                  tape.drop_scale[static_cast<std::size_t>(b)], d_x);
    }
    d_x = maxpool2d_backward(tape.pools[static_cast<std::size_t>(b)], d_x);
    for (int c = 1; c >= 0; --c) {
      const std::size_t li = static_cast<std::size_t>(b) * 2 + static_cast<std::size_t>(c);
      d_x = relu_backward(tape.relu_inputs[li], d_x);
      Conv2dGrads<T> cg = conv2d_backward(tape.conv_inputs[li], params.entries[li].weights,
                                          params.entries[li].bias, d_x);
      grads[li * 2] = std::move(cg.d_kernels);
      grads[li * 2 + 1] = std::move(cg.d_bias);
      d_x = std::move(cg.d_input);
    }
  }
  return grads;
}

/// Persisted best-model record: spec + labels + provenance header and every
/// parameter tensor as little-endian f32, byte-exact across round-trips.
struct Checkpoint {
  ModelSpec spec;
  std::vector<std::string> class_names;
  std::vector<double> class_weights;  // empty when training was unweighted
  std::string label;                  // results-table model name
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;  // 1-based best epoch
  double val_loss = 0.0;
  ModelParamsF params;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ck);
Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace canopy
