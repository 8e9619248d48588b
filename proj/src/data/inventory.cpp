#include "canopy/data/inventory.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "canopy/csv.hpp"

namespace canopy {

std::string canonical_species(std::string_view raw) {
  std::string out;
  bool in_word = false;
  for (char ch : raw) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      in_word = false;
      continue;
    }
    if (!in_word && !out.empty()) out += ' ';
    out += in_word ? static_cast<char>(std::tolower(c)) : static_cast<char>(std::toupper(c));
    in_word = true;
  }
  return out;
}

bool is_vacant_or_unknown(std::string_view canonical) {
  std::string lower(canonical);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.find("vacant") != std::string::npos) return true;
  if (lower.rfind("unknown", 0) == 0) return true;
  return lower == "unidentified" || lower == "not known" || lower == "n/a" || lower == "none";
}

std::string species_slug(std::string_view canonical) {
  std::string out;
  for (char ch : canonical) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) out += static_cast<char>(std::tolower(c));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "unnamed" : out;
}

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trimmed(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

InventoryParseResult parse_inventory(std::string_view csv_text, const ColumnMap& columns) {
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) throw std::invalid_argument("inventory: empty file");

  std::unordered_map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header.emplace(trimmed(rows[0][i]), i);

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = header.find(name);
    if (it == header.end()) return std::nullopt;
    return it->second;
  };

  const auto species_col = find(columns.species);
  const auto lat_col = find(columns.latitude);
  const auto lon_col = find(columns.longitude);
  std::string missing;
  if (!species_col) missing += "'" + columns.species + "' ";
  if (!lat_col) missing += "'" + columns.latitude + "' ";
  if (!lon_col) missing += "'" + columns.longitude + "' ";
  if (!missing.empty()) {
    throw std::invalid_argument("inventory: missing mandatory columns: " + missing);
  }
  const auto id_col = find(columns.id);
  const auto height_col = find(columns.height);
  const auto spread_col = find(columns.spread);
  const auto dbh_col = find(columns.dbh);
  const auto maturity_col = find(columns.maturity);

  auto cell = [&](const std::vector<std::string>& row, std::optional<std::size_t> col) {
    return (col && *col < row.size()) ? trimmed(row[*col]) : std::string();
  };

  InventoryParseResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t data_row = r;  // 1-based among data rows
    if (row.size() == 1 && row[0].empty()) continue;  // blank line

    auto reject = [&](std::string reason) {
      result.rejected.push_back({data_row, std::move(reason)});
    };

    const std::string lat_text = cell(row, lat_col);
    const std::string lon_text = cell(row, lon_col);
    if (lat_text.empty() || lon_text.empty()) {
      reject("missing location");
      continue;
    }
    double lat = 0.0, lon = 0.0;
    if (!parse_double(lat_text, lat) || !parse_double(lon_text, lon)) {
      reject("malformed location");
      continue;
    }
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
      reject("location out of range");
      continue;
    }
    const std::string species = canonical_species(cell(row, species_col));
    if (species.empty()) {
      reject("missing species");
      continue;
    }
    if (is_vacant_or_unknown(species)) {
      reject(species.find("acant") != std::string::npos ? "vacant plot" : "unknown species");
      continue;
    }

    TreeRecord rec;
    rec.id = cell(row, id_col);
    if (rec.id.empty()) rec.id = "row" + std::to_string(data_row);
    rec.species = species;
    rec.latitude = lat;
    rec.longitude = lon;

    bool bad_numeric = false;
    auto optional_numeric = [&](std::optional<std::size_t> col, const std::string& name)
        -> std::optional<double> {
      const std::string text = cell(row, col);
      if (text.empty()) return std::nullopt;
      double v = 0.0;
      if (!parse_double(text, v)) {
        reject("malformed numeric in column '" + name + "'");
        bad_numeric = true;
        return std::nullopt;
      }
      return v;
    };
    rec.height_m = optional_numeric(height_col, columns.height);
    if (bad_numeric) continue;
    rec.spread_m = optional_numeric(spread_col, columns.spread);
    if (bad_numeric) continue;
    rec.dbh_cm = optional_numeric(dbh_col, columns.dbh);
    if (bad_numeric) continue;
    rec.maturity = cell(row, maturity_col);

    result.records.push_back(std::move(rec));
  }
  return result;
}

TopSpeciesResult select_top_species(const std::vector<TreeRecord>& records, std::size_t k) {
  if (k == 0) throw std::invalid_argument("select_top_species: k must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.species];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  TopSpeciesResult out;
  if (ranked.size() < k) {
    out.warnings.push_back("only " + std::to_string(ranked.size()) +
                           " distinct species present, requested top " + std::to_string(k));
  }
  const std::size_t take = std::min(k, ranked.size());
  for (std::size_t i = 0; i < take; ++i) out.species.push_back(ranked[i].first);

  for (const auto& r : records) {
    if (std::find(out.species.begin(), out.species.end(), r.species) != out.species.end()) {
      out.records.push_back(r);
    }
  }
  return out;
}

}  // namespace canopy
