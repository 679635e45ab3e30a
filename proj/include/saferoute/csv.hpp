#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace saferoute {

// Minimal CSV reader for the flat, comma-separated files this project ships.
// Fields are trimmed of surrounding whitespace; quoting is not supported.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column name -> index. Throws DataError listing the column if absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

// Parses CSV text with a mandatory header row. Blank lines are skipped.
// Short rows are padded with empty fields so row.size() == header.size().
CsvTable parse_csv(std::string_view text);

std::string trim(std::string_view s);

}  // namespace saferoute
