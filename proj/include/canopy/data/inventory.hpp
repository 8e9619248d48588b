#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace canopy {

/// One cleaned inventory row.
struct TreeRecord {
  std::string id;
  std::string species;  // canonicalized
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> height_m;
  std::optional<double> spread_m;
  std::optional<double> dbh_cm;
  std::string maturity;

  bool operator==(const TreeRecord&) const = default;
};

/// Header names for the inventory columns; defaults follow the Camden
/// tree inventory schema. species/latitude/longitude are mandatory.
struct ColumnMap {
  std::string id = "Identifier";
  std::string species = "Common Name";
  std::string latitude = "Latitude";
  std::string longitude = "Longitude";
  std::string height = "Height In Metres";
  std::string spread = "Spread In Metres";
  std::string dbh = "Diameter In Centimetres At Breast Height";
  std::string maturity = "Maturity";
};

struct RejectedRow {
  std::size_t row;  // 1-based data row index (header excluded)
  std::string reason;
};

struct InventoryParseResult {
  std::vector<TreeRecord> records;
  std::vector<RejectedRow> rejected;
};

/// Trim, collapse runs of whitespace, title-case each word.
std::string canonical_species(std::string_view raw);

/// Vacant-plot or unknown-species markers that the cleaning pass removes.
bool is_vacant_or_unknown(std::string_view canonical);

/// Filesystem-friendly species name: lowercase, words joined by '_'.
std::string species_slug(std::string_view canonical);

/// Rows with missing/malformed locations, vacant plots or unknown species
/// are excluded and itemized with reasons. Missing mandatory columns fail
/// the whole parse, naming the columns.
InventoryParseResult parse_inventory(std::string_view csv_text, const ColumnMap& columns = {});

struct TopSpeciesResult {
  std::vector<TreeRecord> records;
  std::vector<std::string> species;  // ranked by frequency desc, ties lexicographic
  std::vector<std::string> warnings;
};

TopSpeciesResult select_top_species(const std::vector<TreeRecord>& records, std::size_t k);

}  // namespace canopy
