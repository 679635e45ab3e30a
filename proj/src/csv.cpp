#include "saferoute/csv.hpp"

#include <algorithm>
#include <sstream>

#include "saferoute/errors.hpp"

namespace saferoute {

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

static std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t start = 0;
    bool saw_header = false;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(start)
                                    : text.substr(start, nl - start);
        start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (!saw_header) {
            table.header = std::move(fields);
            saw_header = true;
        } else {
            fields.resize(table.header.size());
            table.rows.push_back(std::move(fields));
        }
    }
    if (!saw_header) throw DataError("CSV input has no header row");
    return table;
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw DataError("missing required column '" + name + "' in CSV header");
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

}  // namespace saferoute
