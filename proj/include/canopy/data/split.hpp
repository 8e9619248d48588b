#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canopy/data/inventory.hpp"

namespace canopy {

enum class Split { train, validate, test };

std::string split_name(Split s);
Split parse_split(std::string_view name);

struct SplitRatios {
  double train = 0.7;
  double validate = 0.2;
  double test = 0.1;

  void validate_sums() const;
  bool operator==(const SplitRatios&) const = default;
};

/// Largest-remainder apportionment of n items over the given ratios.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios);

/// Per-item split assignment, stratified by label: within each label, items
/// are shuffled by a label-keyed substream of `seed` and partitioned by
/// largest-remainder apportionment. Labels with fewer than 3 items go wholly
/// to train with a warning.
std::vector<Split> stratified_split_labels(const std::vector<std::string>& labels,
                                           const SplitRatios& ratios, std::uint64_t seed,
                                           std::vector<std::string>* warnings = nullptr);

/// Per-item fold assignment (0..k-1), stratified by label; per-label fold
/// sizes differ by at most 1. Throws naming any label smaller than k.
std::vector<std::size_t> stratified_kfold_labels(const std::vector<std::string>& labels,
                                                 std::size_t k, std::uint64_t seed);

struct ManifestEntry {
  std::string id;
  std::string species;
  Split split = Split::train;
  double lat = 0.0;
  double lon = 0.0;
  std::string path;    // dataset-relative image path
  std::string status;  // pending | ok | failed

  bool operator==(const ManifestEntry&) const = default;
};

/// Split assignment of every image plus the ratios/seed that produced it.
struct DatasetManifest {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;

  std::size_t count(std::string_view species, Split split) const;
  std::vector<std::string> species_sorted() const;

  std::string serialize() const;
  static DatasetManifest parse(std::string_view text);
};

/// Builds the manifest for the cleaned records: stratified split plus the
/// planned dataset path dataset/<split>/<species_slug>/<id>.png per entry
/// (status "pending" until tiles are fetched).
DatasetManifest stratified_split(const std::vector<TreeRecord>& records,
                                 const SplitRatios& ratios, std::uint64_t seed);

/// Fold partition of cleaned records for cross-validation.
std::vector<std::vector<TreeRecord>> stratified_kfold(const std::vector<TreeRecord>& records,
                                                      std::size_t k, std::uint64_t seed);

}  // namespace canopy
