#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "canopy/augment.hpp"
#include "canopy/data/mercator.hpp"
#include "canopy/data/split.hpp"
#include "canopy/init.hpp"
#include "canopy/layers.hpp"
#include "canopy/model.hpp"
#include "canopy/optim.hpp"

namespace py = pybind11;
using namespace canopy;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

TensorF to_tensor(const FloatArray& array) {
  py::buffer_info info = array.request();
  Shape shape(info.shape.begin(), info.shape.end());
  std::vector<float> data(static_cast<const float*>(info.ptr),
                          static_cast<const float*>(info.ptr) + info.size);
  return TensorF(std::move(shape), std::move(data));
}

py::array_t<float> from_tensor(const TensorF& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<float> out(shape);
  std::copy(t.data(), t.data() + t.size(), static_cast<float*>(out.request().ptr));
  return out;
}

ModelParamsF params_from_list(const py::list& entries) {
  ModelParamsF params;
  for (const auto& item : entries) {
    const auto tuple = item.cast<py::tuple>();
    ParamEntry<float> e;
    e.id = tuple[0].cast<std::string>();
    e.weights = to_tensor(tuple[1].cast<FloatArray>());
    e.bias = to_tensor(tuple[2].cast<FloatArray>());
    params.entries.push_back(std::move(e));
  }
  return params;
}

InitializerKind make_initializer(const std::string& name, double value, double mean,
                                 double stddev) {
  InitializerKind kind = InitializerKind::parse(name);
  kind.value = value;
  kind.mean = mean;
  kind.stddev = stddev;
  return kind;
}

struct PyOptimizer {
  OptimizerState<float> state;
  bool initialized = false;
  OptimizerKind kind;
  OptimizerHyper hyper;

  PyOptimizer(const std::string& name, std::optional<double> lr, double beta1, double beta2,
              double rho, std::optional<double> epsilon)
      : kind(parse_optimizer(name)), hyper(default_hyper(kind)) {
    if (lr) hyper.learning_rate = *lr;
    hyper.beta1 = beta1;
    hyper.beta2 = beta2;
    hyper.rho = rho;
    if (epsilon) hyper.epsilon = *epsilon;
  }

  void step(py::list params, const py::list& grads) {
    if (params.size() != grads.size()) {
      throw std::invalid_argument("step: params and grads must have equal length");
    }
    std::vector<TensorF> param_tensors, grad_tensors;
    std::vector<Shape> shapes;
    for (std::size_t i = 0; i < params.size(); ++i) {
      param_tensors.push_back(to_tensor(params[i].cast<FloatArray>()));
      grad_tensors.push_back(to_tensor(grads[i].cast<FloatArray>()));
      shapes.push_back(param_tensors.back().shape());
    }
    if (!initialized) {
      state = init_state<float>(kind, hyper, shapes);
      initialized = true;
    }
    std::vector<TensorF*> param_ptrs;
    std::vector<const TensorF*> grad_ptrs;
    for (std::size_t i = 0; i < param_tensors.size(); ++i) {
      param_ptrs.push_back(&param_tensors[i]);
      grad_ptrs.push_back(&grad_tensors[i]);
    }
    apply_step(state, param_ptrs, grad_ptrs);
    for (std::size_t i = 0; i < param_tensors.size(); ++i) {
      params[i] = from_tensor(param_tensors[i]);
    }
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Aerial tree-species CNN toolkit: layer primitives, initializers, "
            "optimizers, the parameterized model family and dataset utilities.";
  m.attr("__version__") = "0.1.0";

  m.def("ground_resolution", &ground_resolution, py::arg("latitude"), py::arg("zoom"),
        "Web Mercator meters per pixel at a latitude and zoom level.");

  m.def(
      "fan_of",
      [](const std::vector<std::size_t>& shape, const std::string& kind) {
        const Fan fan = fan_of(shape, kind == "conv" ? LayerKind::conv : LayerKind::dense);
        return py::make_tuple(fan.fan_in, fan.fan_out);
      },
      py::arg("shape"), py::arg("kind"), "(fan_in, fan_out) of a conv or dense shape.");

  m.def(
      "initialize",
      [](const std::string& kind, const std::vector<std::size_t>& shape, std::uint64_t seed,
         double value, double mean, double stddev) {
        return from_tensor(
            initialize<float>(make_initializer(kind, value, mean, stddev), shape, RngStream(seed)));
      },
      py::arg("kind"), py::arg("shape"), py::arg("seed"), py::arg("value") = 0.0,
      py::arg("mean") = 0.0, py::arg("stddev") = 0.05,
      "Sample a tensor from a named initializer, deterministically per seed.");

  m.def(
      "conv2d",
      [](const FloatArray& input, const FloatArray& kernels, const FloatArray& bias) {
        return from_tensor(conv2d_forward(to_tensor(input), to_tensor(kernels), to_tensor(bias)));
      },
      py::arg("input"), py::arg("kernels"), py::arg("bias"),
      "Same-padded stride-1 convolution of [H,W,Cin] with [k,k,Cin,Cout].");

  m.def(
      "relu", [](const FloatArray& x) { return from_tensor(relu_forward(to_tensor(x))); },
      py::arg("x"));

  m.def(
      "maxpool2d",
      [](const FloatArray& x) { return from_tensor(maxpool2d_forward(to_tensor(x)).output); },
      py::arg("x"), "2x2 stride-2 max pooling with floor semantics.");

  m.def(
      "dense",
      [](const FloatArray& x, const FloatArray& w, const FloatArray& b) {
        return from_tensor(dense_forward(to_tensor(x), to_tensor(w), to_tensor(b)));
      },
      py::arg("x"), py::arg("weights"), py::arg("bias"));

  m.def(
      "softmax_cross_entropy",
      [](const FloatArray& logits, std::size_t target, std::optional<FloatArray> weights) {
        std::optional<TensorF> w;
        if (weights) w = to_tensor(*weights);
        const auto r = softmax_cross_entropy(to_tensor(logits), target, w);
        return py::make_tuple(r.loss, from_tensor(r.d_logits));
      },
      py::arg("logits"), py::arg("target"), py::arg("weights") = py::none(),
      "(loss, d_logits) of the weighted categorical cross-entropy.");

  m.def(
      "compute_class_weights",
      [](const std::vector<std::size_t>& counts) {
        const TensorD w = compute_class_weights(counts);
        py::array_t<double> out(static_cast<py::ssize_t>(w.size()));
        std::copy(w.data(), w.data() + w.size(), static_cast<double*>(out.request().ptr));
        return out;
      },
      py::arg("class_counts"), "Balanced per-class loss weights total/(K*count).");

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init([](int n_blocks, int kernel_size, const std::vector<std::size_t>& filters,
                       std::size_t fc_width, double dropout_rate, const std::string& initializer,
                       std::size_t input_h, std::size_t input_w, std::size_t n_classes) {
             ModelSpec s;
             s.n_blocks = n_blocks;
             s.kernel_size = kernel_size;
             s.filters = filters;
             s.fc_width = fc_width;
             s.dropout_rate = dropout_rate;
             s.initializer = InitializerKind::parse(initializer);
             s.input_h = input_h;
             s.input_w = input_w;
             s.n_classes = n_classes;
             s.validate();
             return s;
           }),
           py::arg("n_blocks") = 1, py::arg("kernel_size") = 3,
           py::arg("filters") = std::vector<std::size_t>{}, py::arg("fc_width") = 128,
           py::arg("dropout_rate") = 0.0, py::arg("initializer") = "he_uniform",
           py::arg("input_h") = 200, py::arg("input_w") = 200, py::arg("n_classes") = 6)
      .def_readonly("n_blocks", &ModelSpec::n_blocks)
      .def_readonly("kernel_size", &ModelSpec::kernel_size)
      .def_readonly("fc_width", &ModelSpec::fc_width)
      .def_readonly("dropout_rate", &ModelSpec::dropout_rate)
      .def_property_readonly("initializer",
                             [](const ModelSpec& s) { return s.initializer.name(); })
      .def("effective_filters", &ModelSpec::effective_filters)
      .def("spatial_trace", &ModelSpec::spatial_trace)
      .def("count_parameters", [](const ModelSpec& s) { return count_parameters(s); })
      .def("to_json", &ModelSpec::to_json)
      .def("__repr__", [](const ModelSpec& s) {
        return "ModelSpec(n_blocks=" + std::to_string(s.n_blocks) + ", initializer='" +
               s.initializer.name() + "')";
      });

  m.def(
      "build_model",
      [](const ModelSpec& spec, std::uint64_t seed) {
        const auto params = build_model<float>(spec, RngStream(seed));
        py::list out;
        for (const auto& e : params.entries) {
          out.append(py::make_tuple(e.id, from_tensor(e.weights), from_tensor(e.bias)));
        }
        return out;
      },
      py::arg("spec"), py::arg("seed"),
      "Initialized parameters as a list of (layer_id, weights, bias).");

  m.def(
      "model_forward",
      [](const ModelSpec& spec, const py::list& params, const FloatArray& image, bool training,
         std::uint64_t seed) {
        const auto model = params_from_list(params);
        const TensorF input = to_tensor(image);
        if (input.rank() == 4) {  // batch
          std::vector<TensorF> images;
          const std::size_t b = input.dim(0), stride = input.size() / b;
          for (std::size_t i = 0; i < b; ++i) {
            std::vector<float> chunk(input.data() + i * stride, input.data() + (i + 1) * stride);
            images.emplace_back(Shape{input.dim(1), input.dim(2), input.dim(3)},
                                std::move(chunk));
          }
          return from_tensor(model_forward_batch(spec, model, images, training, RngStream(seed)));
        }
        return from_tensor(model_forward(spec, model, input, training, RngStream(seed)));
      },
      py::arg("spec"), py::arg("params"), py::arg("image"), py::arg("training") = false,
      py::arg("seed") = 0, "Logits for one [H,W,3] image or an [N,H,W,3] batch.");

  py::class_<PyOptimizer>(m, "Optimizer")
      .def(py::init<const std::string&, std::optional<double>, double, double, double,
                    std::optional<double>>(),
           py::arg("kind"), py::arg("learning_rate") = py::none(), py::arg("beta1") = 0.9,
           py::arg("beta2") = 0.999, py::arg("rho") = 0.9, py::arg("epsilon") = py::none())
      .def("step", &PyOptimizer::step, py::arg("params"), py::arg("grads"),
           "One update; writes new parameter arrays back into the params list.")
      .def_property_readonly("step_count",
                             [](const PyOptimizer& o) { return o.state.step; })
      .def_property_readonly("learning_rate",
                             [](const PyOptimizer& o) { return o.hyper.learning_rate; });

  m.def(
      "stratified_split",
      [](const std::vector<std::string>& labels, std::tuple<double, double, double> ratios,
         std::uint64_t seed) {
        SplitRatios r{std::get<0>(ratios), std::get<1>(ratios), std::get<2>(ratios)};
        const auto splits = stratified_split_labels(labels, r, seed);
        std::vector<std::string> names;
        names.reserve(splits.size());
        for (const auto s : splits) names.push_back(split_name(s));
        return names;
      },
      py::arg("labels"), py::arg("ratios") = std::make_tuple(0.7, 0.2, 0.1), py::arg("seed") = 0,
      "Per-item split names, class-proportional within +-1 sample.");

  m.def(
      "stratified_kfold",
      [](const std::vector<std::string>& labels, std::size_t k, std::uint64_t seed) {
        return stratified_kfold_labels(labels, k, seed);
      },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0,
      "Per-item fold indices with per-class sizes differing by at most 1.");

  m.def(
      "augment",
      [](const FloatArray& image, std::uint64_t seed, double rotation, double width_shift,
         double height_shift, double horizontal_flip, std::pair<double, double> zoom,
         std::pair<double, double> brightness) {
        AugmentParams p;
        p.rotation_max = rotation;
        p.width_shift_max = width_shift;
        p.height_shift_max = height_shift;
        p.hflip_prob = horizontal_flip;
        p.zoom_range = zoom;
        p.brightness_range = brightness;
        return from_tensor(augment(to_tensor(image), p, RngStream(seed)));
      },
      py::arg("image"), py::arg("seed"), py::arg("rotation") = 40.0,
      py::arg("width_shift") = 0.2, py::arg("height_shift") = 0.2,
      py::arg("horizontal_flip") = 0.5, py::arg("zoom") = std::make_pair(0.8, 1.2),
      py::arg("brightness") = std::make_pair(0.8, 1.2),
      "Seeded rotation/shift/flip/zoom/brightness augmentation of an [H,W,3] image.");

  m.def("oversample_plan", &oversample_plan, py::arg("train_counts"), py::arg("target"),
        "Augmented-copy multiplicities per original, summing to target per class.");
}
