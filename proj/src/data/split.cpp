#include "canopy/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "canopy/csv.hpp"
#include "canopy/rng.hpp"

namespace canopy {

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validate: return "validate";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validate") return Split::validate;
  if (name == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(name) +
                              "' (expected train, validate or test)");
}

void SplitRatios::validate_sums() const {
  if (train < 0 || validate < 0 || test < 0 ||
      std::fabs(train + validate + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be nonnegative and sum to 1");
  }
}

std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios) {
  std::vector<std::size_t> counts(ratios.size(), 0);
  std::vector<double> fractions(ratios.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double quota = static_cast<double>(n) * ratios[i];
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    fractions[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fractions[a] > fractions[b]; });
  for (std::size_t i = 0; assigned < n; ++i) {
    ++counts[order[i % order.size()]];
    ++assigned;
  }
  return counts;
}

namespace {

// Fisher-Yates with draws from the stream.
void shuffle_indices(std::vector<std::size_t>& idx, RngStream rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

std::map<std::string, std::vector<std::size_t>> group_by_label(
    const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

}  // namespace

std::vector<Split> stratified_split_labels(const std::vector<std::string>& labels,
                                           const SplitRatios& ratios, std::uint64_t seed,
                                           std::vector<std::string>* warnings) {
  ratios.validate_sums();
  std::vector<Split> out(labels.size(), Split::train);
  const RngStream root(seed);
  for (auto& [label, idx] : group_by_label(labels)) {
    std::vector<std::size_t> shuffled = idx;
    shuffle_indices(shuffled, root.substream("split").substream(label));
    if (shuffled.size() < 3) {
      if (warnings) {
        warnings->push_back("species '" + label + "' has only " +
                            std::to_string(shuffled.size()) +
                            " records; all assigned to train");
      }
      continue;  // defaulted to train
    }
    const auto counts = apportion(shuffled.size(), {ratios.train, ratios.validate, ratios.test});
    std::size_t pos = 0;
    const Split splits[3] = {Split::train, Split::validate, Split::test};
    for (std::size_t part = 0; part < 3; ++part) {
      for (std::size_t c = 0; c < counts[part]; ++c) out[shuffled[pos++]] = splits[part];
    }
  }
  return out;
}

std::vector<std::size_t> stratified_kfold_labels(const std::vector<std::string>& labels,
                                                 std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  std::vector<std::size_t> out(labels.size(), 0);
  const RngStream root(seed);
  for (auto& [label, idx] : group_by_label(labels)) {
    if (idx.size() < k) {
      throw std::invalid_argument("stratified_kfold: class '" + label + "' has " +
                                  std::to_string(idx.size()) + " records, fewer than k=" +
                                  std::to_string(k));
    }
    std::vector<std::size_t> shuffled = idx;
    shuffle_indices(shuffled, root.substream("kfold").substream(label));
    for (std::size_t i = 0; i < shuffled.size(); ++i) out[shuffled[i]] = i % k;
  }
  return out;
}

std::size_t DatasetManifest::count(std::string_view species, Split split) const {
  std::size_t n = 0;
  for (const auto& e : entries) {
    if (e.species == species && e.split == split) ++n;
  }
  return n;
}

std::vector<std::string> DatasetManifest::species_sorted() const {
  std::vector<std::string> names;
  for (const auto& e : entries) {
    if (std::find(names.begin(), names.end(), e.species) == names.end()) {
      names.push_back(e.species);
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

namespace {
std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

std::string DatasetManifest::serialize() const {
  char head[128];
  std::snprintf(head, sizeof(head), "# ratios=%.6f,%.6f,%.6f seed=%llu\n", ratios.train,
                ratios.validate, ratios.test, static_cast<unsigned long long>(seed));
  std::string out = head;
  for (const auto& e : entries) {
    out += csv_join({e.id, e.species, split_name(e.split), format_coord(e.lat),
                     format_coord(e.lon), e.path, e.status});
    out += '\n';
  }
  return out;
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  DatasetManifest m;
  const std::size_t eol = text.find('\n');
  if (eol == std::string_view::npos) throw std::invalid_argument("manifest: missing header line");
  const std::string header(text.substr(0, eol));
  unsigned long long seed = 0;
  if (std::sscanf(header.c_str(), "# ratios=%lf,%lf,%lf seed=%llu", &m.ratios.train,
                  &m.ratios.validate, &m.ratios.test, &seed) != 4) {
    throw std::invalid_argument("manifest: bad header line: " + header);
  }
  m.seed = seed;
  const auto rows = parse_csv(text.substr(eol + 1));
  for (const auto& row : rows) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 7) {
      throw std::invalid_argument("manifest: expected 7 fields per record, got " +
                                  std::to_string(row.size()));
    }
    ManifestEntry e;
    e.id = row[0];
    e.species = row[1];
    e.split = parse_split(row[2]);
    e.lat = std::stod(row[3]);
    e.lon = std::stod(row[4]);
    e.path = row[5];
    e.status = row[6];
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest stratified_split(const std::vector<TreeRecord>& records,
                                 const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.species);

  DatasetManifest manifest;
  manifest.ratios = ratios;
  manifest.seed = seed;
  const auto splits = stratified_split_labels(labels, ratios, seed, &manifest.warnings);
  manifest.entries.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    ManifestEntry e;
    e.id = records[i].id;
    e.species = records[i].species;
    e.split = splits[i];
    e.lat = records[i].latitude;
    e.lon = records[i].longitude;
    e.path = "dataset/" + split_name(e.split) + "/" + species_slug(e.species) + "/" +
             records[i].id + ".png";
    e.status = "pending";
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

std::vector<std::vector<TreeRecord>> stratified_kfold(const std::vector<TreeRecord>& records,
                                                      std::size_t k, std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.species);
  const auto folds = stratified_kfold_labels(labels, k, seed);
  std::vector<std::vector<TreeRecord>> out(k);
  for (std::size_t i = 0; i < records.size(); ++i) out[folds[i]].push_back(records[i]);
  return out;
}

}  // namespace canopy
