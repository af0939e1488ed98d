#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace kvdelay {

// Writes to a temporary sibling and renames it over the target.
void write_file_atomic(const std::string& path, const std::string& contents);

// 17 significant digits, "." separator.
std::string format_double(double v);

// Rows of equal length; every value formatted with format_double.
std::string csv_text(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

std::string json_text(const nlohmann::json& j);

}  // namespace kvdelay
