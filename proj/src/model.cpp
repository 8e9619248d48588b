#include "canopy/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace canopy {

void ModelSpec::validate() const {
  if (n_blocks < 1 || n_blocks > 6) {
    throw std::invalid_argument("model: n_blocks must be in {1..6}, got " +
                                std::to_string(n_blocks));
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw std::invalid_argument("model: kernel_size must be a positive odd integer, got " +
                                std::to_string(kernel_size));
  }
  if (!filters.empty() && filters.size() != static_cast<std::size_t>(n_blocks)) {
    throw std::invalid_argument("model: filters list has " + std::to_string(filters.size()) +
                                " entries for " + std::to_string(n_blocks) + " blocks");
  }
  for (std::size_t f : filters) {
    if (f == 0) throw std::invalid_argument("model: filter counts must be positive");
  }
  if (fc_width == 0) throw std::invalid_argument("model: fc_width must be positive");
  if (n_classes < 2) {
    throw std::invalid_argument("model: need at least 2 classes, got " +
                                std::to_string(n_classes));
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("model: dropout_rate must be in [0,1), got " +
                                std::to_string(dropout_rate));
  }
  std::size_t h = input_h, w = input_w;
  for (int b = 1; b <= n_blocks; ++b) {
    if (h < 2 || w < 2) {
      throw std::invalid_argument("model: input " + std::to_string(input_h) + "x" +
                                  std::to_string(input_w) + " collapses below 1x1 at block " +
                                  std::to_string(b) + " of N=" + std::to_string(n_blocks));
    }
    h /= 2;
    w /= 2;
  }
}

std::vector<std::size_t> ModelSpec::effective_filters() const {
  if (!filters.empty()) return filters;
  std::vector<std::size_t> out;
  std::size_t f = 32;
  for (int b = 0; b < n_blocks; ++b) {
    out.push_back(f);
    if (f < 256) f *= 2;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ModelSpec::spatial_trace() const {
  std::vector<std::pair<std::size_t, std::size_t>> trace;
  std::size_t h = input_h, w = input_w;
  trace.emplace_back(h, w);
  for (int b = 0; b < n_blocks; ++b) {
    h /= 2;
    w /= 2;
    trace.emplace_back(h, w);
  }
  return trace;
}

std::size_t count_parameters(const ModelSpec& spec) {
  spec.validate();
  const auto filters = spec.effective_filters();
  const std::size_t k = static_cast<std::size_t>(spec.kernel_size);
  std::size_t total = 0;
  std::size_t cin = 3;
  for (std::size_t cout : filters) {
    total += k * k * cin * cout + cout;  // first conv of the block
    total += k * k * cout * cout + cout;  // second conv
    cin = cout;
  }
  const auto trace = spec.spatial_trace();
  const std::size_t flat = trace.back().first * trace.back().second * filters.back();
  total += flat * spec.fc_width + spec.fc_width;
  total += spec.fc_width * spec.n_classes + spec.n_classes;
  return total;
}

TensorD compute_class_weights(const std::vector<std::size_t>& class_counts) {
  if (class_counts.empty()) throw std::invalid_argument("class weights: no classes");
  std::size_t total = 0;
  for (std::size_t i = 0; i < class_counts.size(); ++i) {
    if (class_counts[i] == 0) {
      throw std::invalid_argument("class weights: class " + std::to_string(i) +
                                  " has zero count and cannot be weighted");
    }
    total += class_counts[i];
  }
  const double k = static_cast<double>(class_counts.size());
  TensorD w({class_counts.size()});
  for (std::size_t i = 0; i < class_counts.size(); ++i) {
    w[i] = static_cast<double>(total) / (k * static_cast<double>(class_counts[i]));
  }
  return w;
}

namespace {

using nlohmann::json;

json initializer_to_json(const InitializerKind& k) {
  return json{{"name", k.name()}, {"value", k.value}, {"mean", k.mean}, {"stddev", k.stddev}};
}

InitializerKind initializer_from_json(const json& j) {
  InitializerKind k = InitializerKind::parse(j.at("name").get<std::string>());
  k.value = j.value("value", 0.0);
  k.mean = j.value("mean", 0.0);
  k.stddev = j.value("stddev", 0.05);
  return k;
}

json spec_to_json_obj(const ModelSpec& s) {
  return json{{"n_blocks", s.n_blocks},
              {"kernel_size", s.kernel_size},
              {"filters", s.filters},
              {"fc_width", s.fc_width},
              {"dropout_rate", s.dropout_rate},
              {"initializer", initializer_to_json(s.initializer)},
              {"input_h", s.input_h},
              {"input_w", s.input_w},
              {"n_classes", s.n_classes}};
}

ModelSpec spec_from_json_obj(const json& j) {
  ModelSpec s;
  s.n_blocks = j.at("n_blocks").get<int>();
  s.kernel_size = j.at("kernel_size").get<int>();
  s.filters = j.at("filters").get<std::vector<std::size_t>>();
  s.fc_width = j.at("fc_width").get<std::size_t>();
  s.dropout_rate = j.at("dropout_rate").get<double>();
  s.initializer = initializer_from_json(j.at("initializer"));
  s.input_h = j.at("input_h").get<std::size_t>();
  s.input_w = j.at("input_w").get<std::size_t>();
  s.n_classes = j.at("n_classes").get<std::size_t>();
  return s;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

void put_tensor(std::vector<std::uint8_t>& out, const TensorF& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

TensorF read_tensor(Reader& r) {
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw std::runtime_error("checkpoint: implausible tensor rank");
  Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) shape[i] = r.u32();
  TensorF t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f32();
  return t;
}

constexpr std::uint32_t kMagic = 0x4B434E43;  // "CNCK" little-endian
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::string ModelSpec::to_json() const { return spec_to_json_obj(*this).dump(); }

ModelSpec ModelSpec::from_json(const std::string& text) {
  return spec_from_json_obj(json::parse(text));
}

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ck) {
  json header{{"model", spec_to_json_obj(ck.spec)},
              {"classes", ck.class_names},
              {"class_weights", ck.class_weights},
              {"label", ck.label}};
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> out;
  put_u32(out, kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.insert(out.end(), header_text.begin(), header_text.end());
  put_u64(out, ck.seed);
  put_u32(out, ck.epoch);
  put_f64(out, ck.val_loss);
  put_u32(out, static_cast<std::uint32_t>(ck.params.entries.size()));
  for (const auto& e : ck.params.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.id.size()));
    out.insert(out.end(), e.id.begin(), e.id.end());
    put_tensor(out, e.weights);
    put_tensor(out, e.bias);
  }
  return out;
}

Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  if (r.u32() != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ck;
  const json header = json::parse(r.str());
  ck.spec = spec_from_json_obj(header.at("model"));
  ck.class_names = header.at("classes").get<std::vector<std::string>>();
  ck.class_weights = header.at("class_weights").get<std::vector<double>>();
  ck.label = header.value("label", "");
  ck.seed = r.u64();
  ck.epoch = r.u32();
  ck.val_loss = r.f64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    ParamEntry<float> e;
    e.id = r.str();
    e.weights = read_tensor(r);
    e.bias = read_tensor(r);
    ck.params.entries.push_back(std::move(e));
  }
  if (r.pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const auto bytes = checkpoint_to_bytes(ck);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

namespace detail {
std::vector<std::string> layer_ids(const ModelSpec& spec) {
  std::vector<std::string> ids;
  for (int b = 1; b <= spec.n_blocks; ++b) {
    ids.push_back("block" + std::to_string(b) + "_conv1");
    ids.push_back("block" + std::to_string(b) + "_conv2");
  }
  ids.push_back("fc_hidden");
  ids.push_back("fc_output");
  return ids;
}
}  // namespace detail

}  // namespace canopy
