#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace canopy {

/// RFC-4180-style parse: quoted fields, doubled quotes, embedded
/// commas/newlines, optional CRLF line endings.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Quotes a field only when needed.
std::string csv_escape(std::string_view field);

std::string csv_join(const std::vector<std::string>& fields);

}  // namespace canopy
